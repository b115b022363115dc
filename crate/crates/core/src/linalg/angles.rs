//! Jordan (principal) angles and the invariants σ_i and σ̃_a.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::frames::{complement, jordan_count, OrientedSubspace, Subspace};

/// Jordan angles of a pair of subspaces.
///
/// `angles` holds the m genuinely free angles sorted θ_1 ≥ … ≥ θ_m; the
/// remaining min{d_E, d_F} − m directions have cosine exactly 1 and are only
/// counted in `forced_ones`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSpectrum {
    pub angles: Vec<f64>,
    pub forced_ones: usize,
}

impl AngleSpectrum {
    pub fn m(&self) -> usize {
        self.angles.len()
    }

    /// Squared cosines of the free angles, in the order of `angles`.
    pub fn cos_sq(&self) -> Vec<f64> {
        self.angles.iter().map(|t| t.cos().powi(2)).collect()
    }
}

/// Descending singular values of a matrix (values only).
fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    let mut vals: Vec<f64> = svd.singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

fn spectrum_from_cross_gram(
    gram: &DMatrix<f64>,
    nprime: usize,
    d_e: usize,
    d_f: usize,
) -> Result<AngleSpectrum> {
    let m = jordan_count(nprime, d_e, d_f);
    let total = d_e.min(d_f);
    let vals = singular_values_desc(gram);
    debug_assert_eq!(vals.len(), total);
    let forced = total - m;
    for (idx, &s) in vals.iter().take(forced).enumerate() {
        if (s - 1.0).abs() > 1e-8 {
            return Err(Error::inconsistent(format!(
                "singular value {idx} must be 1 by dimension counting, got {s}"
            )));
        }
    }
    // Smallest m singular values; arccos is decreasing, so ascending cosines
    // give the required descending angles.
    let mut angles: Vec<f64> = vals[forced..]
        .iter()
        .rev()
        .map(|&s| s.clamp(0.0, 1.0).acos())
        .collect();
    // clamp also guards the lower end: tiny negative values from the SVD
    angles.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(AngleSpectrum {
        angles,
        forced_ones: forced,
    })
}

/// Jordan angles between two subspaces of a common ambient space.
///
/// Cosines are the singular values of the cross-Gram matrix Q_Eᵀ·Q_F, clamped
/// into [0,1]; the top min{d_E,d_F} − m values are forced to equal 1 by
/// dimension counting and are verified to 1e-8.
pub fn principal_angles(e: &Subspace, f: &Subspace) -> Result<AngleSpectrum> {
    if e.ambient_dim() != f.ambient_dim() {
        return Err(Error::invalid(format!(
            "ambient dimensions differ: {} vs {}",
            e.ambient_dim(),
            f.ambient_dim()
        )));
    }
    let gram = e.frame().transpose() * f.frame();
    spectrum_from_cross_gram(&gram, e.ambient_dim(), e.dim(), f.dim())
}

/// Elementary symmetric polynomials e_0..e_len of the given values, by the
/// stable recurrence e_i(x_1..x_j) = e_i(x_1..x_{j-1}) + x_j·e_{i-1}(x_1..x_{j-1}).
pub fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (j, &x) in xs.iter().enumerate() {
        for i in (1..=j + 1).rev() {
            e[i] += x * e[i - 1];
        }
    }
    e
}

/// σ_i(E,F): the i-th elementary symmetric polynomial in the squared cosines
/// of the Jordan angles between E and F.
pub fn sigma_elem(e: &Subspace, f: &Subspace, i: usize) -> Result<f64> {
    let all = sigma_all(e, f)?;
    all.get(i).copied().ok_or_else(|| {
        Error::invalid(format!("sigma index {i} out of range 0..={}", all.len() - 1))
    })
}

/// All σ_0..σ_m for a pair of subspaces at once.
pub fn sigma_all(e: &Subspace, f: &Subspace) -> Result<Vec<f64>> {
    let spec = principal_angles(e, f)?;
    Ok(elementary_symmetric(&spec.cos_sq()))
}

/// σ_0..σ_m from a raw cross-Gram matrix, with the ambient dimension given
/// explicitly.
///
/// The evaluation engines use this with n′ = n−1: both subspaces live inside
/// the hyperplane v^⊥ and the Jordan-angle count must be taken there, while
/// the Gram entries themselves do not depend on the ambient coordinates.
pub fn sigma_from_cross_gram(gram: &DMatrix<f64>, nprime: usize) -> Result<Vec<f64>> {
    let spec = spectrum_from_cross_gram(gram, nprime, gram.nrows(), gram.ncols())?;
    Ok(elementary_symmetric(&spec.cos_sq()))
}

/// Squared projection-volume cosine between two subspaces, computed by the
/// Gram-determinant route det(Q_Aᵀ·Q_B·Q_Bᵀ·Q_A) with A the smaller side.
///
/// This is an independent route to σ_m(E,F) and is kept separate on purpose.
pub fn cos_sq(e: &Subspace, f: &Subspace) -> Result<f64> {
    if e.ambient_dim() != f.ambient_dim() {
        return Err(Error::invalid("ambient dimensions differ"));
    }
    Ok(cos_sq_frames(e.frame(), f.frame()))
}

pub(crate) fn cos_sq_frames(qe: &DMatrix<f64>, qf: &DMatrix<f64>) -> f64 {
    let (small, large) = if qe.ncols() <= qf.ncols() {
        (qe, qf)
    } else {
        (qf, qe)
    };
    if small.ncols() == 0 {
        return 1.0;
    }
    let g = small.transpose() * large;
    (&g * g.transpose()).determinant()
}

/// σ̃_a(E,F) for half-dimensional subspaces of an even-dimensional oriented
/// space: det(B_{E,F})·det(B_{E,F^⊥}), F^⊥ oriented so that F^⊥ ⊕ F is
/// positively oriented in W.
///
/// The result does not depend on the orientations chosen for E and F and
/// flips sign with `w_orientation`.
pub fn sigma_tilde(w_orientation: i8, e: &Subspace, f: &Subspace) -> Result<f64> {
    sigma_tilde_oriented(
        w_orientation,
        &OrientedSubspace::positive(e.clone()),
        &OrientedSubspace::positive(f.clone()),
    )
}

/// σ̃_a with explicit orientations on E and F; the value is invariant under
/// flipping either one, which is exercised by the unit tests.
pub fn sigma_tilde_oriented(
    w_orientation: i8,
    e: &OrientedSubspace,
    f: &OrientedSubspace,
) -> Result<f64> {
    if w_orientation != 1 && w_orientation != -1 {
        return Err(Error::invalid("W orientation must be +1 or -1"));
    }
    let (eb, fb) = (&e.base, &f.base);
    let n = eb.ambient_dim();
    if fb.ambient_dim() != n {
        return Err(Error::invalid("ambient dimensions differ"));
    }
    if n % 2 != 0 {
        return Err(Error::invalid(format!("ambient dimension {n} is odd")));
    }
    let a = n / 2;
    if eb.dim() != a || fb.dim() != a {
        return Err(Error::invalid(format!(
            "σ̃ needs two {a}-dimensional subspaces of a {n}-dimensional space, got dims {} and {}",
            eb.dim(),
            fb.dim()
        )));
    }
    let f_perp = complement(fb);
    // Orient F^⊥ so that [F^⊥ | F] is a positive basis of W, with F carrying
    // its explicit orientation.
    let mut full = DMatrix::zeros(n, n);
    full.view_mut((0, 0), (n, a)).copy_from(f_perp.frame());
    full.view_mut((0, a), (n, a)).copy_from(fb.frame());
    let mut perp_sign = if full.determinant() * (f.orientation as f64) > 0.0 {
        1.0
    } else {
        -1.0
    };
    perp_sign *= w_orientation as f64;

    let det_ef = (fb.frame().transpose() * eb.frame()).determinant();
    let det_eperp = (f_perp.frame().transpose() * eb.frame()).determinant();
    let e_sign = e.orientation as f64;
    let f_sign = f.orientation as f64;
    // Each determinant is taken with respect to the oriented bases; the E
    // orientation enters both factors and therefore cancels.
    Ok((e_sign * f_sign * det_ef) * (e_sign * perp_sign * det_eperp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frames::orthonormal_frame;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    fn span(n: usize, vs: &[DVector<f64>]) -> Subspace {
        orthonormal_frame(n, vs).unwrap()
    }

    #[test]
    fn planar_angle() {
        let a = span(2, &[e(2, 0)]);
        let b = span(2, &[e(2, 0) + e(2, 1)]);
        let s = principal_angles(&a, &b).unwrap();
        assert_eq!(s.m(), 1);
        assert_abs_diff_eq!(s.angles[0], FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn shared_plus_orthogonal_direction() {
        // E = span{e1,e2}, F = span{e1,e3} in R^4: angles (π/2, 0)
        let a = span(4, &[e(4, 0), e(4, 1)]);
        let b = span(4, &[e(4, 0), e(4, 2)]);
        let s = principal_angles(&a, &b).unwrap();
        assert_eq!(s.m(), 2);
        assert_abs_diff_eq!(s.angles[0], FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.angles[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_subspaces_have_zero_angles() {
        let a = span(5, &[e(5, 0) + e(5, 3), e(5, 1)]);
        let s = principal_angles(&a, &a).unwrap();
        assert!(s.angles.iter().all(|&t| t.abs() < 1e-7));
    }

    #[test]
    fn mismatched_ambient_is_rejected() {
        let a = span(2, &[e(2, 0)]);
        let b = span(3, &[e(3, 0)]);
        assert!(principal_angles(&a, &b).is_err());
    }

    #[test]
    fn sigma_zero_is_one() {
        let a = span(4, &[e(4, 0), e(4, 1)]);
        let b = span(4, &[e(4, 1) + e(4, 2), e(4, 3)]);
        assert_abs_diff_eq!(sigma_elem(&a, &b, 0).unwrap(), 1.0);
    }

    #[test]
    fn sigma_counts_binomials_on_equal_spaces() {
        // E = F of dim p in R^{2p}: all cosines are 1, σ_i = C(p,i)
        let a = span(4, &[e(4, 0), e(4, 1)]);
        let all = sigma_all(&a, &a).unwrap();
        assert_eq!(all.len(), 3);
        assert_abs_diff_eq!(all[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(all[1], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(all[2], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sigma_halves_at_quarter_turn() {
        let a = span(3, &[e(3, 0) + e(3, 1)]);
        let b = span(3, &[e(3, 0)]);
        assert_abs_diff_eq!(sigma_elem(&a, &b, 1).unwrap(), 0.5, epsilon = 1e-12);
        assert!(sigma_elem(&a, &b, 2).is_err());
    }

    #[test]
    fn sigma_tilde_in_the_plane() {
        // E = span{e1}, F at angle θ, standard orientation: σ̃ = sinθ·cosθ
        for &theta in &[0.3f64, 1.0, 2.2] {
            let a = span(2, &[e(2, 0)]);
            let f = span(2, &[theta.cos() * e(2, 0) + theta.sin() * e(2, 1)]);
            let got = sigma_tilde(1, &a, &f).unwrap();
            assert_abs_diff_eq!(got, theta.sin() * theta.cos(), epsilon = 1e-12);
            let flipped = sigma_tilde(-1, &a, &f).unwrap();
            assert_abs_diff_eq!(flipped, -theta.sin() * theta.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sigma_tilde_ignores_internal_orientations() {
        let a = span(4, &[e(4, 0), e(4, 1) + e(4, 2)]);
        let f = span(4, &[e(4, 1), e(4, 2) + e(4, 3)]);
        let base = sigma_tilde(1, &a, &f).unwrap();
        let oe = OrientedSubspace::positive(a.clone());
        let of = OrientedSubspace::positive(f.clone());
        for (ea, fa) in [
            (oe.clone(), of.flipped()),
            (oe.flipped(), of.clone()),
            (oe.flipped(), of.flipped()),
        ] {
            let v = sigma_tilde_oriented(1, &ea, &fa).unwrap();
            assert_abs_diff_eq!(v, base, epsilon = 1e-12);
        }
    }

    #[test]
    fn sigma_tilde_rejects_odd_or_unbalanced() {
        let a = span(3, &[e(3, 0)]);
        let b = span(3, &[e(3, 1)]);
        assert!(sigma_tilde(1, &a, &b).is_err());
        let a = span(4, &[e(4, 0)]);
        let b = span(4, &[e(4, 1), e(4, 2)]);
        assert!(sigma_tilde(1, &a, &b).is_err());
    }
}
