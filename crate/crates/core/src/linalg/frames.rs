//! Orthonormal frames for linear subspaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Entrywise tolerance for `frameᵀ·frame = I` when a frame is accepted.
pub const FRAME_ORTHO_TOL: f64 = 1e-12;

/// Relative singular-value threshold used everywhere a dimension is inferred.
pub const RANK_REL_TOL: f64 = 1e-10;

/// A linear subspace of ℝⁿ carried by an orthonormal frame.
///
/// The frame is an n×d matrix whose columns are orthonormal and span the
/// subspace; d = 0 (the trivial subspace) and d = n (the full space) are both
/// allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a frame, validating orthonormality to [`FRAME_ORTHO_TOL`].
    pub fn from_frame(frame: DMatrix<f64>) -> Result<Self> {
        if frame.nrows() == 0 {
            return Err(Error::invalid("subspace ambient dimension must be positive"));
        }
        if frame.ncols() > frame.nrows() {
            return Err(Error::invalid(format!(
                "frame has {} columns in ambient dimension {}",
                frame.ncols(),
                frame.nrows()
            )));
        }
        let gram = frame.transpose() * &frame;
        let d = frame.ncols();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - want).abs() > FRAME_ORTHO_TOL {
                    return Err(Error::invalid(format!(
                        "frame columns are not orthonormal: gram[{i},{j}] = {}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(Subspace { frame })
    }

    /// The trivial 0-dimensional subspace of ℝⁿ.
    pub fn empty(ambient: usize) -> Self {
        Subspace {
            frame: DMatrix::zeros(ambient, 0),
        }
    }

    /// The full space ℝⁿ with the standard basis as frame.
    pub fn full(ambient: usize) -> Self {
        Subspace {
            frame: DMatrix::identity(ambient, ambient),
        }
    }

    /// Span of a single (nonzero) vector.
    pub fn line(v: &DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if n < 1e-300 {
            return Err(Error::invalid("cannot span a line by the zero vector"));
        }
        Ok(Subspace {
            frame: DMatrix::from_columns(&[v / n]),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthogonal projector Q·Qᵀ onto the subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }
}

/// An orientation attached to a frame: the sign is interpreted relative to
/// the column order of `base.frame()`.
#[derive(Clone, Debug)]
pub struct OrientedSubspace {
    pub base: Subspace,
    pub orientation: i8,
}

impl OrientedSubspace {
    pub fn new(base: Subspace, orientation: i8) -> Result<Self> {
        if orientation != 1 && orientation != -1 {
            return Err(Error::invalid("orientation must be +1 or -1"));
        }
        Ok(OrientedSubspace { base, orientation })
    }

    pub fn positive(base: Subspace) -> Self {
        OrientedSubspace {
            base,
            orientation: 1,
        }
    }

    pub fn flipped(&self) -> Self {
        OrientedSubspace {
            base: self.base.clone(),
            orientation: -self.orientation,
        }
    }
}

/// Number of Jordan angles between subspaces of dimensions `d_e`, `d_f`
/// inside an ambient space of dimension `nprime`:
/// m = min{d_e, n′−d_e, d_f, n′−d_f}.
pub fn jordan_count(nprime: usize, d_e: usize, d_f: usize) -> usize {
    d_e.min(nprime - d_e).min(d_f).min(nprime - d_f)
}

/// Orthonormal frame spanning the same space as the given vectors.
///
/// The rank is decided by singular values above `RANK_REL_TOL` relative to
/// the largest one; redundant or dependent inputs simply lower the dimension.
pub fn orthonormal_frame(ambient: usize, vectors: &[DVector<f64>]) -> Result<Subspace> {
    if ambient == 0 {
        return Err(Error::invalid("empty ambient dimension"));
    }
    for v in vectors {
        if v.len() != ambient {
            return Err(Error::invalid(format!(
                "vector of dimension {} in ambient dimension {ambient}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
    }
    if vectors.is_empty() {
        return Ok(Subspace::empty(ambient));
    }
    let mat = DMatrix::from_columns(vectors);
    orthonormal_frame_of(&mat)
}

/// Same as [`orthonormal_frame`], taking the vectors as matrix columns.
pub fn orthonormal_frame_of(mat: &DMatrix<f64>) -> Result<Subspace> {
    if mat.nrows() == 0 {
        return Err(Error::invalid("empty ambient dimension"));
    }
    if mat.ncols() == 0 {
        return Ok(Subspace::empty(mat.nrows()));
    }
    let svd = mat.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::inconsistent("SVD did not produce U"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let sigma_max = svd.singular_values[order[0]];
    if sigma_max <= 1e-300 {
        return Ok(Subspace::empty(mat.nrows()));
    }
    let cols: Vec<DVector<f64>> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > RANK_REL_TOL * sigma_max)
        .map(|&i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(Subspace::empty(mat.nrows()));
    }
    Subspace::from_frame(DMatrix::from_columns(&cols))
}

// column-major slice helpers for the orthogonalization hot paths
#[inline]
fn col_dot(data: &[f64], n: usize, a: usize, b: usize) -> f64 {
    let (xa, xb) = (&data[a * n..(a + 1) * n], &data[b * n..(b + 1) * n]);
    xa.iter().zip(xb).map(|(x, y)| x * y).sum()
}

#[inline]
fn col_axpy(data: &mut [f64], n: usize, alpha: f64, src: usize, dst: usize) {
    let (lo, hi) = (src.min(dst), src.max(dst));
    let (head, tail) = data.split_at_mut(hi * n);
    let s = &head[lo * n..lo * n + n];
    let d = &mut tail[..n];
    if src < dst {
        for (di, si) in d.iter_mut().zip(s) {
            *di += alpha * si;
        }
    } else {
        // never needed: projections always update later columns
        unreachable!("axpy from a later column");
    }
}

/// Modified Gram–Schmidt with a second orthogonalization pass.
///
/// Assumes full column rank (the case for Gaussian draws); returns `None`
/// when a column collapses below `1e-12` of its original norm, which callers
/// treat as a resample request.
pub fn mgs_orthonormalize(mat: &mut DMatrix<f64>) -> Option<()> {
    let (n, d) = (mat.nrows(), mat.ncols());
    let data = mat.as_mut_slice();
    for j in 0..d {
        let orig = col_dot(data, n, j, j).sqrt();
        for _pass in 0..2 {
            for i in 0..j {
                let proj = col_dot(data, n, i, j);
                col_axpy(data, n, -proj, i, j);
            }
        }
        let norm = col_dot(data, n, j, j).sqrt();
        if norm <= 1e-12 * orig.max(1.0) {
            return None;
        }
        let inv = 1.0 / norm;
        for x in &mut data[j * n..(j + 1) * n] {
            *x *= inv;
        }
    }
    Some(())
}

/// Completes the columns of `frame` (assumed orthonormal) to an orthonormal
/// basis of ℝⁿ and returns the n−d added columns.
///
/// Candidates are the standard basis vectors; at every step the one with the
/// largest residual is taken, which keeps the construction well conditioned
/// (the best residual norm is always ≥ 1/√n).
pub fn complete_basis(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let n = frame.nrows();
    let d = frame.ncols();
    let mut q = vec![0.0f64; n * n];
    q[..n * d].copy_from_slice(frame.as_slice());
    let mut used = vec![false; n];
    let mut residual = vec![0.0f64; n];
    let mut have = d;
    while have < n {
        let mut best = (usize::MAX, -1.0f64);
        for i in 0..n {
            if used[i] {
                continue;
            }
            // squared residual of e_i via one projection pass: e_i is exact,
            // Q orthonormal, so ‖r‖² = 1 − Σ q_ci²
            let mut sq = 1.0;
            for c in 0..have {
                let qi = q[c * n + i];
                sq -= qi * qi;
            }
            if sq > best.1 {
                best = (i, sq);
            }
        }
        let pick = best.0;
        used[pick] = true;
        residual.fill(0.0);
        residual[pick] = 1.0;
        for _pass in 0..2 {
            for c in 0..have {
                let col = &q[c * n..(c + 1) * n];
                let proj: f64 = col.iter().zip(&residual).map(|(a, b)| a * b).sum();
                for (r, a) in residual.iter_mut().zip(col) {
                    *r -= proj * a;
                }
            }
        }
        let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (slot, r) in q[have * n..(have + 1) * n].iter_mut().zip(&residual) {
            *slot = r / norm;
        }
        have += 1;
    }
    DMatrix::from_column_slice(n, n - d, &q[d * n..])
}

/// Orthogonal complement of a subspace within its ambient space.
pub fn complement(s: &Subspace) -> Subspace {
    Subspace {
        frame: complete_basis(s.frame()),
    }
}
