//! Identification of a flag area measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which member of the family a spec selects: S_k^(p),i for some
/// 0 ≤ i ≤ m, or the exceptional S̃ (odd n, p = k = (n−1)/2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sigma { i: usize },
    Exceptional,
}

/// (n, k, p) plus the variant; identifies which flag area measure to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub variant: Variant,
}

impl MeasureSpec {
    pub fn sigma(n: usize, k: usize, p: usize, i: usize) -> Result<Self> {
        let spec = MeasureSpec {
            n,
            k,
            p,
            variant: Variant::Sigma { i },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exceptional(n: usize) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::invalid(format!(
                "the exceptional measure needs odd n, got {n}"
            )));
        }
        let spec = MeasureSpec {
            n,
            k: (n - 1) / 2,
            p: (n - 1) / 2,
            variant: Variant::Exceptional,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// m = min{k, n−k−1, p, n−p−1}: the index range bound for σ variants
    /// (Jordan angles are taken inside the (n−1)-dimensional space v^⊥).
    pub fn m(&self) -> usize {
        self.k
            .min(self.n - self.k - 1)
            .min(self.p)
            .min(self.n - self.p - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("ambient dimension must be positive"));
        }
        if self.k >= self.n || self.p >= self.n {
            return Err(Error::invalid(format!(
                "need 0 <= k,p <= n-1, got k={}, p={}, n={}",
                self.k, self.p, self.n
            )));
        }
        match self.variant {
            Variant::Sigma { i } => {
                if i > self.m() {
                    return Err(Error::invalid(format!(
                        "sigma index {i} out of range 0..={}",
                        self.m()
                    )));
                }
            }
            Variant::Exceptional => {
                if self.n % 2 == 0 || self.k != (self.n - 1) / 2 || self.p != self.k {
                    return Err(Error::invalid(
                        "exceptional variant needs odd n and p = k = (n-1)/2",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn is_exceptional(&self) -> bool {
        matches!(self.variant, Variant::Exceptional)
    }

    /// Short human-readable tag used in result records.
    pub fn label(&self) -> String {
        match self.variant {
            Variant::Sigma { i } => format!("S_{}^({}),{} [n={}]", self.k, self.p, i, self.n),
            Variant::Exceptional => format!("S~_{}^({}) [n={}]", self.k, self.p, self.n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_range_enforced() {
        assert!(MeasureSpec::sigma(4, 1, 1, 1).is_ok());
        assert!(MeasureSpec::sigma(4, 1, 1, 2).is_err());
        assert!(MeasureSpec::sigma(3, 3, 1, 0).is_err());
    }

    #[test]
    fn exceptional_needs_odd_middle() {
        let s = MeasureSpec::exceptional(5).unwrap();
        assert_eq!((s.k, s.p), (2, 2));
        assert!(MeasureSpec::exceptional(4).is_err());
        let bad = MeasureSpec {
            n: 5,
            k: 1,
            p: 2,
            variant: Variant::Exceptional,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn m_matches_the_dimension_formula() {
        assert_eq!(MeasureSpec::sigma(4, 1, 1, 1).unwrap().m(), 1);
        assert_eq!(MeasureSpec::sigma(5, 2, 2, 0).unwrap().m(), 2);
        assert_eq!(MeasureSpec::sigma(6, 2, 3, 0).unwrap().m(), 2);
        assert_eq!(MeasureSpec::sigma(5, 1, 2, 0).unwrap().m(), 1);
    }
}
