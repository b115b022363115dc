//! Machine-readable check reports.

use serde::{Deserialize, Serialize};

/// The rule that decides whether observed values pass against expected ones.
///
/// Statistical checks gate at a multiple of the standard error (4·SE by
/// default: a ≈6·10⁻⁵ false-failure rate per comparison, which keeps a whole
/// suite reliable without re-runs).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Tolerance {
    /// |observed − expected| ≤ eps for every pair.
    Absolute { eps: f64 },
    /// |observed − expected| ≤ eps·|expected| for every pair.
    Relative { eps: f64 },
    /// |observed − expected| ≤ factor·std_errors[idx] for every pair.
    StdError { factor: f64, std_errors: Vec<f64> },
    /// observed ≥ −factor·std_errors[idx] (one-sided, positivity).
    NonNegative { factor: f64, std_errors: Vec<f64> },
    /// Numerical-rank gate on normalized singular values: exactly
    /// expected[0] of them ≥ keep·σ₁ and every later one ≤ drop·σ₁.
    RankGate { keep: f64, drop: f64 },
}

impl Tolerance {
    fn pair_holds(&self, idx: usize, observed: f64, expected: f64) -> bool {
        match self {
            Tolerance::Absolute { eps } => (observed - expected).abs() <= *eps,
            Tolerance::Relative { eps } => (observed - expected).abs() <= eps * expected.abs(),
            Tolerance::StdError { factor, std_errors } => {
                (observed - expected).abs() <= factor * std_errors[idx]
            }
            Tolerance::NonNegative { factor, std_errors } => {
                observed >= -factor * std_errors[idx]
            }
            Tolerance::RankGate { .. } => true, // decided globally below
        }
    }

    /// Whether the rule holds for every observed/expected pair.
    pub fn holds(&self, observed: &[f64], expected: &[f64]) -> bool {
        if let Tolerance::RankGate { keep, drop } = self {
            let rank = expected[0].round() as usize;
            if observed.is_empty() || observed.len() < rank {
                return false;
            }
            let s1 = observed[0];
            if s1 <= 0.0 {
                return false;
            }
            let kept = observed.iter().filter(|&&s| s / s1 >= *keep).count();
            let leaked = observed.iter().skip(rank).any(|&s| s / s1 > *drop);
            return kept == rank && !leaked;
        }
        observed
            .iter()
            .zip(expected)
            .enumerate()
            .all(|(i, (&o, &e))| self.pair_holds(i, o, e))
    }
}

/// One check outcome: what was compared, how, and whether it passed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub params: serde_json::Value,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
    pub tolerance: Tolerance,
    pub passed: bool,
    pub samples: u64,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl CheckReport {
    /// Assembles a report, computing `passed` from the tolerance rule.
    pub fn build(
        check_id: impl Into<String>,
        params: serde_json::Value,
        observed: Vec<f64>,
        expected: Vec<f64>,
        tolerance: Tolerance,
        samples: u64,
        seed: u64,
        started: std::time::Instant,
    ) -> CheckReport {
        let passed = tolerance.holds(&observed, &expected);
        CheckReport {
            check_id: check_id.into(),
            params,
            observed,
            expected,
            tolerance,
            passed,
            samples,
            seed,
            runtime_ms: started.elapsed().as_millis() as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_decide_pairs() {
        assert!(Tolerance::Absolute { eps: 0.1 }.holds(&[1.05], &[1.0]));
        assert!(!Tolerance::Absolute { eps: 0.01 }.holds(&[1.05], &[1.0]));
        assert!(Tolerance::Relative { eps: 1e-2 }.holds(&[101.0], &[100.0]));
        let se = Tolerance::StdError {
            factor: 4.0,
            std_errors: vec![0.1, 0.2],
        };
        assert!(se.holds(&[1.3, 2.5], &[1.0, 2.0]));
        assert!(!se.holds(&[1.5, 2.0], &[1.0, 2.0]));
        let pos = Tolerance::NonNegative {
            factor: 4.0,
            std_errors: vec![0.1],
        };
        assert!(pos.holds(&[-0.3], &[0.0]));
        assert!(!pos.holds(&[-0.5], &[0.0]));
    }

    #[test]
    fn rank_gate() {
        let gate = Tolerance::RankGate {
            keep: 1e-2,
            drop: 1e-3,
        };
        assert!(gate.holds(&[1.0, 0.4, 0.0002], &[2.0]));
        assert!(!gate.holds(&[1.0, 0.4, 0.01], &[2.0])); // third value too large
        assert!(!gate.holds(&[1.0, 0.005, 0.0001], &[2.0])); // second too small
    }

    #[test]
    fn report_json_shape() {
        let r = CheckReport::build(
            "demo",
            serde_json::json!({"n": 3}),
            vec![1.0],
            vec![1.0],
            Tolerance::Absolute { eps: 0.0 },
            10,
            7,
            std::time::Instant::now(),
        );
        assert!(r.passed);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"check_id\":\"demo\""));
        assert!(s.contains("\"rule\":\"absolute\""));
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert!(back.passed);
    }
}
