//! Ellipsoids as the smooth convex bodies: closed-form Gauss map, shape
//! operator, and boundary-area Monte Carlo weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{ball_constants, sample_sphere, StreamRng};
use crate::linalg::complete_basis;

/// The body {x : |A⁻¹(x − c)| ≤ 1} for a symmetric positive-definite A.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "EllipsoidJson", into = "EllipsoidJson")]
pub struct Ellipsoid {
    shape: DMatrix<f64>,
    center: DVector<f64>,
    inv: DMatrix<f64>,
    inv_sq: DMatrix<f64>,
    omega_n: f64,
}

#[derive(Serialize, Deserialize)]
struct EllipsoidJson {
    shape: Vec<Vec<f64>>,
    center: Vec<f64>,
}

impl TryFrom<EllipsoidJson> for Ellipsoid {
    type Error = Error;

    fn try_from(raw: EllipsoidJson) -> Result<Ellipsoid> {
        let n = raw.center.len();
        if raw.shape.len() != n || raw.shape.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("shape matrix does not match the center dimension"));
        }
        let shape = DMatrix::from_fn(n, n, |i, j| raw.shape[i][j]);
        Ellipsoid::new(shape, DVector::from_column_slice(&raw.center))
    }
}

impl From<Ellipsoid> for EllipsoidJson {
    fn from(e: Ellipsoid) -> EllipsoidJson {
        let n = e.dim();
        EllipsoidJson {
            shape: (0..n)
                .map(|i| (0..n).map(|j| e.shape[(i, j)]).collect())
                .collect(),
            center: e.center.iter().copied().collect(),
        }
    }
}

/// One boundary point with everything the smooth engine needs at it.
#[derive(Clone, Debug)]
pub struct BoundarySample {
    /// Point on ∂K.
    pub point: DVector<f64>,
    /// Outward unit normal ν(x).
    pub normal: DVector<f64>,
    /// Orthonormal frame of ν(x)^⊥ (n×(n−1)); the shape operator is
    /// expressed in these coordinates.
    pub tangent_frame: DMatrix<f64>,
    /// Shape operator S_x, symmetric positive semidefinite, (n−1)×(n−1).
    pub shape_operator: DMatrix<f64>,
    /// Weight such that the mean of weight·f over samples estimates
    /// ∫_{∂K} f dH^{n−1}.
    pub area_weight: f64,
}

impl Ellipsoid {
    pub fn new(shape: DMatrix<f64>, center: DVector<f64>) -> Result<Ellipsoid> {
        let n = center.len();
        if n == 0 {
            return Err(Error::invalid("empty ambient dimension"));
        }
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::invalid("shape matrix does not match the center dimension"));
        }
        let sym_err = (&shape - shape.transpose()).abs().max();
        if sym_err > 1e-9 * shape.abs().max().max(1.0) {
            return Err(Error::invalid("shape matrix is not symmetric"));
        }
        let eig = shape.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::invalid("shape matrix is not positive definite"));
        }
        let inv = shape
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("shape matrix is singular"))?;
        let inv_sq = &inv * &inv;
        let (_, omega_n) = ball_constants(n)?;
        Ok(Ellipsoid {
            shape,
            center,
            inv,
            inv_sq,
            omega_n,
        })
    }

    /// Ball of radius r centered at the origin.
    pub fn ball(n: usize, r: f64) -> Result<Ellipsoid> {
        if !(r > 0.0) {
            return Err(Error::invalid("radius must be positive"));
        }
        Ellipsoid::new(DMatrix::identity(n, n) * r, DVector::zeros(n))
    }

    pub fn unit_ball(n: usize) -> Result<Ellipsoid> {
        Ellipsoid::ball(n, 1.0)
    }

    /// Axis-aligned ellipsoid with the given semi-axes, centered at 0.
    pub fn with_axes(axes: &[f64]) -> Result<Ellipsoid> {
        if axes.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::invalid("semi-axes must be positive"));
        }
        let n = axes.len();
        Ellipsoid::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(axes)),
            DVector::zeros(n),
        )
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Ellipsoid> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("malformed ellipsoid JSON: {e}")))
    }

    /// Draws s uniformly on S^{n−1} and maps it to x = c + A·s.
    ///
    /// With q(x) = |A⁻¹(x−c)|²: the outward normal is ∇q/|∇q| = A⁻¹s/|A⁻¹s|;
    /// the shape operator is the tangent restriction of Hess q/|∇q| =
    /// A⁻²/|A⁻¹s|; the area weight is ω_n times the Gram-determinant Jacobian
    /// of s ↦ A·s restricted to T_s S^{n−1}.
    pub fn boundary_sample(&self, rng: &mut StreamRng) -> Result<BoundarySample> {
        let n = self.dim();
        let s = sample_sphere(n, rng)?;
        let point = &self.center + &self.shape * &s;
        let w = &self.inv * &s;
        let w_norm = w.norm();
        let normal = &w / w_norm;

        let tangent_frame = complete_basis(&DMatrix::from_columns(&[normal.clone()]));
        let mut shape_operator =
            tangent_frame.transpose() * &self.inv_sq * &tangent_frame / w_norm;
        // symmetrize away the last-bit asymmetry of the triple product
        let sym = (&shape_operator + shape_operator.transpose()) * 0.5;
        shape_operator = sym;

        let sphere_tangent = complete_basis(&DMatrix::from_columns(&[s.clone()]));
        let jac_cols = &self.shape * &sphere_tangent;
        let gram = jac_cols.transpose() * &jac_cols;
        let area_weight = self.omega_n * gram.determinant().max(0.0).sqrt();

        Ok(BoundarySample {
            point,
            normal,
            tangent_frame,
            shape_operator,
            area_weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::RngStream;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_samples() {
        let ball = Ellipsoid::unit_ball(3).unwrap();
        let mut rng = RngStream::new(2).rng();
        for _ in 0..100 {
            let bs = ball.boundary_sample(&mut rng).unwrap();
            assert!((bs.normal.clone() - &bs.point).norm() < 1e-12);
            let dev = (&bs.shape_operator - DMatrix::identity(2, 2)).abs().max();
            assert!(dev < 1e-12, "ball shape operator must be the identity");
            assert_abs_diff_eq!(bs.area_weight, 4.0 * PI, epsilon = 1e-10);
            // tangent frame orthogonal to the normal
            let cross = bs.tangent_frame.transpose() * &bs.normal;
            assert!(cross.abs().max() < 1e-10);
        }
    }

    #[test]
    fn scaled_ball_mass_and_curvature() {
        let r = 1.7;
        let ball = Ellipsoid::ball(3, r).unwrap();
        let mut rng = RngStream::new(3).rng();
        let mut acc = crate::exec::MeanAccumulator::default();
        for _ in 0..20_000 {
            let bs = ball.boundary_sample(&mut rng).unwrap();
            let eig = bs.shape_operator.symmetric_eigen();
            for l in eig.eigenvalues.iter() {
                assert_abs_diff_eq!(*l, 1.0 / r, epsilon = 1e-10);
            }
            acc.push(bs.area_weight);
        }
        // the weight is constant on a ball, so the SE is pure rounding noise
        let want = 4.0 * PI * r * r;
        assert!(
            (acc.mean() - want).abs() < 4.0 * acc.std_error() + 1e-9 * want,
            "total mass {} vs {want}",
            acc.mean()
        );
    }

    #[test]
    fn ellipse_axis_curvature() {
        // 2-D ellipse with semi-axes (a, b): curvature at the x-axis endpoint is a/b².
        let (a, b) = (2.0, 0.7);
        let e = Ellipsoid::with_axes(&[a, b]).unwrap();
        // craft the sample s = e1 by hand through the same formulas
        let s = DVector::from_column_slice(&[1.0, 0.0]);
        let w = e.inv.clone() * &s;
        let t = complete_basis(&DMatrix::from_columns(&[(&w / w.norm())]));
        let shape_op = t.transpose() * &e.inv_sq * &t / w.norm();
        assert_abs_diff_eq!(shape_op[(0, 0)], a / (b * b), epsilon = 1e-12);
    }

    #[test]
    fn shape_operator_matches_finite_difference_gauss_map() {
        let e = Ellipsoid::with_axes(&[1.0, 1.5, 2.0]).unwrap();
        let mut rng = RngStream::new(7).rng();
        for _ in 0..50 {
            let bs = e.boundary_sample(&mut rng).unwrap();
            let s = e.inv.clone() * (&bs.point - e.center());
            let h = 1e-4;
            for col in 0..2 {
                let t = bs.tangent_frame.column(col).into_owned();
                // walk on the boundary: perturb in s-space along A⁻¹t
                let ds = e.inv.clone() * &t;
                let sp = (&s + &ds * h).normalize();
                let sm = (&s - &ds * h).normalize();
                let xp = e.center() + e.shape() * sp;
                let xm = e.center() + e.shape() * sm;
                // outward normal ∝ ∇q = 2A⁻²(x−c)
                let nu = |x: &DVector<f64>| {
                    let w = e.inv_sq.clone() * (x - e.center());
                    (&w / w.norm()).clone_owned()
                };
                let dnu = nu(&xp) - nu(&xm);
                let dx = &xp - &xm;
                let predicted =
                    bs.tangent_frame.clone() * (&bs.shape_operator * (bs.tangent_frame.transpose() * &dx));
                assert!(
                    (&dnu - &predicted).norm() <= 1e-5 * dx.norm().max(1e-12),
                    "FD mismatch: {} vs {}",
                    dnu.norm(),
                    predicted.norm()
                );
            }
        }
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Ellipsoid::new(asym, DVector::zeros(2)).is_err());
        let negdef = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -2.0]));
        assert!(Ellipsoid::new(negdef, DVector::zeros(2)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let e = Ellipsoid::with_axes(&[1.0, 1.5, 2.0]).unwrap();
        let s = e.to_json();
        let back = Ellipsoid::from_json(&s).unwrap();
        assert_eq!(back.dim(), 3);
        assert_abs_diff_eq!(back.shape()[(2, 2)], 2.0);
        assert!(Ellipsoid::from_json("{\"shape\": [[1.0]]}").is_err());
    }
}
