//! Rotation-invariant samplers.
//!
//! Gaussian draws followed by orthonormalization realize the invariant
//! measures exactly (no rejection): the Gaussian matrix distribution is
//! O(n)-invariant and the span only depends on the matrix through its column
//! space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grassmann::rng::StreamRng;
use crate::linalg::{complete_basis, mgs_orthonormalize, Subspace};

pub(crate) fn gaussian_vector(n: usize, rng: &mut StreamRng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub(crate) fn gaussian_matrix(r: usize, c: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    // Column-major fill so the draw order matches the storage order.
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Uniform draw from the unit sphere S^{n-1}.
pub fn sample_sphere(n: usize, rng: &mut StreamRng) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::invalid("sphere dimension must be positive"));
    }
    loop {
        let v = gaussian_vector(n, rng);
        let norm = v.norm();
        if norm > 1e-12 {
            return Ok(v / norm);
        }
    }
}

/// Invariant draw from the Grassmannian Gr_p(ℝⁿ).
pub fn sample_grassmann(n: usize, p: usize, rng: &mut StreamRng) -> Result<Subspace> {
    if p > n {
        return Err(Error::invalid(format!("p = {p} exceeds ambient {n}")));
    }
    if n == 0 {
        return Err(Error::invalid("ambient dimension must be positive"));
    }
    if p == 0 {
        return Ok(Subspace::empty(n));
    }
    Ok(Subspace::from_frame(sample_stiefel(n, p, rng)).expect("orthonormal by construction"))
}

pub(crate) fn sample_stiefel(n: usize, p: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    loop {
        let mut g = gaussian_matrix(n, p, rng);
        if mgs_orthonormalize(&mut g).is_some() {
            return g;
        }
    }
}

/// Invariant draw of a d-plane containing the given unit vector: a (d−1)-plane
/// is drawn invariantly inside v^⊥ and v is adjoined as the first frame column.
pub fn sample_grassmann_through(
    v: &DVector<f64>,
    d: usize,
    rng: &mut StreamRng,
) -> Result<Subspace> {
    let n = v.len();
    if d == 0 || d > n {
        return Err(Error::invalid(format!("need 1 <= d <= {n}, got {d}")));
    }
    if (v.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("non-unit vector, |v| = {}", v.norm())));
    }
    Ok(Subspace::from_frame(sample_plane_through(v, d, rng)).expect("orthonormal by construction"))
}

/// Raw-frame version of [`sample_grassmann_through`] used in the hot loops;
/// the first column of the result is `v`.
pub(crate) fn sample_plane_through(
    v: &DVector<f64>,
    d: usize,
    rng: &mut StreamRng,
) -> DMatrix<f64> {
    let n = v.len();
    let mut frame = DMatrix::zeros(n, d);
    frame.set_column(0, v);
    if d > 1 {
        let w = complete_basis(&DMatrix::from_columns(&[v.clone()]));
        let c = sample_stiefel(n - 1, d - 1, rng);
        frame.view_mut((0, 1), (n, d - 1)).copy_from(&(&w * &c));
    }
    frame
}

/// Haar-distributed rotation in SO(n).
pub fn sample_rotation(n: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    let mut g = sample_orthogonal(n, rng);
    if g.determinant() < 0.0 {
        let c0 = -g.column(0).into_owned();
        g.set_column(0, &c0);
    }
    g
}

/// Haar-ish orthogonal matrix (sign of the determinant not controlled).
pub fn sample_orthogonal(n: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    sample_stiefel(n, n, rng)
}
