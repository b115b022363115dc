//! Closed-form constants, evaluated in exact rational arithmetic.
//!
//! These constants multiply Monte Carlo estimates, so they must contribute
//! zero error; everything is assembled from exact binomial coefficients and
//! only converted to `f64` at the very end.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::grassmann::spec::{MeasureSpec, Variant};
use crate::linalg::jordan_count;

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

fn binom_ratio(n: u64, k: u64) -> Ratio<i128> {
    Ratio::from_integer(binomial(n, k) as i128)
}

/// Volume κ_n of the unit n-ball and surface ω_n = n·κ_n of its boundary.
///
/// Uses the exact recurrence κ_n = 2π/n · κ_{n−2} with κ_0 = 1, κ_1 = 2.
pub fn ball_constants(n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("ball constants need n >= 1"));
    }
    // κ_0 = 1, κ_1 = 2
    let mut k = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut m = n % 2;
    while m < n {
        m += 2;
        k *= 2.0 * std::f64::consts::PI / m as f64;
    }
    Ok((k, n as f64 * k))
}

/// The normalizing constant c_{n,k,p,i} of the σ-variant measures:
/// C(n−1,k)⁻¹ · C(m,i)⁻¹ · C(|k−(n−1−p)|+m, i)⁻¹ · C(n−1,i).
pub fn measure_constant(spec: &MeasureSpec) -> Result<f64> {
    Ok(measure_constant_rational(spec)?.to_f64())
}

pub(crate) fn measure_constant_rational(spec: &MeasureSpec) -> Result<Ratio<i128>> {
    spec.validate()?;
    let i = match spec.variant {
        Variant::Sigma { i } => i as u64,
        Variant::Exceptional => {
            return Err(Error::invalid(
                "the exceptional measure has constant 1; no c_{n,k,p,i} is defined for it",
            ))
        }
    };
    let (n, k, p) = (spec.n as u64, spec.k as u64, spec.p as u64);
    let m = spec.m() as u64;
    let gap = k.abs_diff(n - 1 - p);
    let c = binom_ratio(n - 1, i)
        / (binom_ratio(n - 1, k) * binom_ratio(m, i) * binom_ratio(gap + m, i));
    Ok(c)
}

trait RatioExt {
    fn to_f64(&self) -> f64;
}

impl RatioExt for Ratio<i128> {
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Expectation of σ_i(E,F) for an invariantly random E ∈ Gr_p and a fixed
/// F ∈ Gr_k in an n′-dimensional space: C(m,i)·C(|p−k|+m,i)/C(n′,i).
pub fn aomoto_expectation(nprime: usize, p: usize, k: usize, i: usize) -> Result<f64> {
    if p > nprime || k > nprime {
        return Err(Error::invalid(format!(
            "subspace dimensions p={p}, k={k} exceed ambient {nprime}"
        )));
    }
    let m = jordan_count(nprime, p, k);
    if i > m {
        return Err(Error::invalid(format!("index {i} out of range 0..={m}")));
    }
    let (m, gap) = (m as u64, p.abs_diff(k) as u64);
    let r = binom_ratio(m, i as u64) * binom_ratio(gap + m, i as u64)
        / binom_ratio(nprime as u64, i as u64);
    Ok(r.to_f64())
}

/// Log of the (unnormalized) joint density of the squared Jordan-angle
/// cosines x_j between a fixed k-plane and an invariantly random p-plane in
/// dimension n′:
///
/// ```text
/// ∏ x_j^(|p−k|−1)/2 · (1−x_j)^(|n′−p−k|−1)/2 · ∏_{i<j} |x_j − x_i|
/// ```
///
/// Returns −∞ when a factor with positive exponent vanishes (in particular
/// for coincident x_i = x_j). The normalizing constant is deliberately not
/// included; the density is only ever used through ratios.
pub fn james_log_density(x: &[f64], nprime: usize, p: usize, k: usize) -> Result<f64> {
    let m = jordan_count(nprime, p, k);
    if x.len() != m {
        return Err(Error::invalid(format!(
            "expected {m} squared cosines, got {}",
            x.len()
        )));
    }
    for &xi in x {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::invalid(format!("squared cosine {xi} outside [0,1]")));
        }
    }
    let a = (p.abs_diff(k) as f64 - 1.0) / 2.0;
    let b = ((nprime as i64 - p as i64 - k as i64).unsigned_abs() as f64 - 1.0) / 2.0;
    let mut log = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        if a != 0.0 {
            log += a * xj.ln();
        }
        if b != 0.0 {
            log += b * (1.0 - xj).ln();
        }
        for &xi in &x[..j] {
            log += (xj - xi).abs().ln();
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(4, 6), 0);
    }

    #[test]
    fn ball_constants_closed_forms() {
        let (k1, w1) = ball_constants(1).unwrap();
        assert_abs_diff_eq!(k1, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w1, 2.0, epsilon = 1e-15);
        let (k2, w2) = ball_constants(2).unwrap();
        assert_abs_diff_eq!(k2, PI, epsilon = 1e-14);
        assert_abs_diff_eq!(w2, 2.0 * PI, epsilon = 1e-14);
        let (k3, w3) = ball_constants(3).unwrap();
        assert_abs_diff_eq!(k3, 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w3, 4.0 * PI, epsilon = 1e-13);
        assert!(ball_constants(0).is_err());
    }

    #[test]
    fn measure_constants_from_the_defining_formula() {
        let c = |n, k, p, i| measure_constant(&MeasureSpec::sigma(n, k, p, i).unwrap()).unwrap();
        assert_abs_diff_eq!(c(3, 1, 1, 0), 0.5);
        assert_abs_diff_eq!(c(3, 1, 1, 1), 1.0);
        assert_abs_diff_eq!(c(4, 1, 1, 1), 0.5);
        assert!(measure_constant(&MeasureSpec::exceptional(3).unwrap()).is_err());
    }

    #[test]
    fn marginal_prefactor_identity() {
        // c_{n,k,p,i} · C(m,i) · C(|n−1−p−k|+m, i) / C(n−1,i) = C(n−1,k)^{-1},
        // exactly, for every valid (n ≤ 8, k, p, i).
        for n in 2..=8usize {
            for k in 0..n {
                for p in 0..n {
                    let spec0 = MeasureSpec::sigma(n, k, p, 0).unwrap();
                    for i in 0..=spec0.m() {
                        let spec = MeasureSpec::sigma(n, k, p, i).unwrap();
                        let c = measure_constant_rational(&spec).unwrap();
                        let m = spec.m() as u64;
                        let gap = (n as i64 - 1 - p as i64 - k as i64).unsigned_abs();
                        let lhs = c * binom_ratio(m, i as u64) * binom_ratio(gap + m, i as u64)
                            / binom_ratio(n as u64 - 1, i as u64);
                        let rhs =
                            Ratio::from_integer(1i128) / binom_ratio(n as u64 - 1, k as u64);
                        assert_eq!(lhs, rhs, "n={n} k={k} p={p} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn aomoto_closed_forms() {
        assert_abs_diff_eq!(aomoto_expectation(3, 1, 1, 1).unwrap(), 1.0 / 3.0);
        assert_abs_diff_eq!(aomoto_expectation(4, 2, 2, 1).unwrap(), 1.0);
        assert_abs_diff_eq!(aomoto_expectation(7, 3, 2, 2).unwrap(), 1.0 / 7.0);
        assert_abs_diff_eq!(aomoto_expectation(6, 2, 3, 0).unwrap(), 1.0);
        assert!(aomoto_expectation(4, 2, 2, 3).is_err());
    }

    #[test]
    fn james_density_edge_behavior() {
        // m=1, n′=3, p=k=1: density ∝ x^{-1/2}
        let l1 = james_log_density(&[0.25], 3, 1, 1).unwrap();
        let l2 = james_log_density(&[0.5], 3, 1, 1).unwrap();
        assert_abs_diff_eq!(l1 - l2, -0.5 * (0.25f64.ln() - 0.5f64.ln()), epsilon = 1e-12);
        // coincident points kill the Vandermonde factor
        let l = james_log_density(&[0.3, 0.3], 4, 2, 2).unwrap();
        assert!(l.is_infinite() && l < 0.0);
        assert!(james_log_density(&[1.5], 3, 1, 1).is_err());
        assert!(james_log_density(&[0.1, 0.2], 3, 1, 1).is_err());
    }
}
