//! Normalized mixed discriminants.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binom_f64(n: usize, k: usize) -> f64 {
    crate::grassmann::binomial(n as u64, k as u64) as f64
}

/// Mixed discriminant D(A_1[r_1], …, A_s[r_s]) of square matrices with
/// multiplicities summing to the common size m′, normalized so that
/// D(A,…,A) = det A.
///
/// Computed by subset polarization collapsed over repeated slots:
///
/// ```text
/// D = (1/m′!) · Σ_{0 ≤ j_l ≤ r_l} (−1)^{m′−Σj} ∏ C(r_l, j_l) · det(Σ j_l A_l)
/// ```
///
/// The cost is a handful of m′×m′ determinants, which at m′ = n−1 ≤ 7 is
/// cheap and doubles as its own oracle against direct polynomial expansion.
pub fn mixed_discriminant(args: &[(DMatrix<f64>, usize)]) -> Result<f64> {
    if args.is_empty() {
        return Err(Error::invalid("mixed discriminant of an empty list"));
    }
    let size = args[0].0.nrows();
    for (m, _) in args {
        if m.nrows() != size || m.ncols() != size {
            return Err(Error::invalid("all matrices must be square of identical size"));
        }
    }
    let total: usize = args.iter().map(|(_, r)| r).sum();
    if total != size {
        return Err(Error::invalid(format!(
            "multiplicities sum to {total}, expected the matrix size {size}"
        )));
    }
    if size == 0 {
        return Ok(1.0);
    }

    let mut acc = 0.0;
    let mut counts = vec![0usize; args.len()];
    loop {
        let chosen: usize = counts.iter().sum();
        let mut weight = if (size - chosen) % 2 == 0 { 1.0 } else { -1.0 };
        for (l, &j) in counts.iter().enumerate() {
            weight *= binom_f64(args[l].1, j);
        }
        if chosen > 0 {
            let mut s = DMatrix::zeros(size, size);
            for (l, &j) in counts.iter().enumerate() {
                if j > 0 {
                    s += &args[l].0 * j as f64;
                }
            }
            acc += weight * s.determinant();
        }
        // odometer over 0..=r_l per slot
        let mut l = 0;
        loop {
            if l == args.len() {
                return Ok(acc / factorial(size));
            }
            counts[l] += 1;
            if counts[l] <= args[l].1 {
                break;
            }
            counts[l] = 0;
            l += 1;
        }
    }
}
