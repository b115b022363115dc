//! Flag area measures on smooth bodies (ellipsoids), via mixed discriminants
//! of the shape operator and the tangent projections onto E ∩ T_x∂K and E^⊥.
//!
//! For a boundary sample x with shape operator S_x and a plane E ∋ ν(x), the
//! σ-variant kernel is
//!
//! ```text
//! Σ_{a = min{k,p}−m}^{min{k,p}−i} C(min{k,p}−a, i)·C(k,a)·D(S_x[n−k−1], Π_E[a], Π_{E^⊥}[k−a])
//! ```
//!
//! which for k ≤ p collapses (via Π_E + Π_{E^⊥} = Id on the tangent space) to
//! C(k,i)·D(S_x[n−k−1], Id[k−i], Π_{E^⊥}[i]); the engine uses the collapsed
//! form there and the two must agree per sample, which the test suite checks.
//! The estimate carries the prefactor c_{n,k,p,i}·C(n−1,k).

use nalgebra::DMatrix;

use crate::bodies::{BoundarySample, Ellipsoid};
use crate::error::{Error, Result};
use crate::exec::mc_accumulate;
use crate::grassmann::sample::sample_plane_through;
use crate::grassmann::{binomial, measure_constant, MeasureSpec, RngStream, Variant};
use crate::linalg::{complete_basis, mixed_discriminant};
use crate::measures::result::{ellipsoid_label, EvalResult, McConfig};
use crate::measures::testfn::TestFunction;

/// Monte Carlo estimate of ∫ f dS_k^(p),i(K, ·) (or the exceptional S̃) for
/// an ellipsoid K.
pub fn eval_smooth(
    spec: &MeasureSpec,
    body: &Ellipsoid,
    f: &TestFunction,
    mc: &McConfig,
    stream: RngStream,
) -> Result<EvalResult> {
    spec.validate()?;
    let n = body.dim();
    if spec.n != n {
        return Err(Error::invalid(format!(
            "spec dimension {} does not match the body dimension {n}",
            spec.n
        )));
    }
    if n < 2 {
        return Err(Error::invalid("smooth evaluation needs n >= 2"));
    }
    let compiled = f.compile(n)?;
    let (k, p) = (spec.k, spec.p);
    let prefactor = match spec.variant {
        Variant::Sigma { .. } => {
            measure_constant(spec)? * binomial((n - 1) as u64, k as u64) as f64
        }
        Variant::Exceptional => 1.0,
    };
    let variant = spec.variant;
    let acc = mc_accumulate(mc.mode, mc.samples, mc.block, stream, |rng| {
        let bs = body
            .boundary_sample(rng)
            .expect("boundary sampling cannot fail on a valid ellipsoid");
        let e_frame = sample_plane_through(&bs.normal, p + 1, rng);
        let kernel = match variant {
            Variant::Sigma { i } => {
                if k <= p {
                    smooth_kernel_simplified(&bs, &e_frame, k, i)
                } else {
                    smooth_kernel_general(&bs, &e_frame, k, p, i)
                }
            }
            Variant::Exceptional => exceptional_smooth_kernel(&bs, &e_frame),
        };
        bs.area_weight * kernel * compiled.eval(&bs.normal, Some(&e_frame))
    });
    Ok(EvalResult {
        spec: *spec,
        body: ellipsoid_label(body),
        engine: "smooth".to_string(),
        estimate: prefactor * acc.mean(),
        std_error: prefactor * acc.std_error(),
        samples: mc.samples,
        seed: stream.seed,
    })
}

/// Tangent projections Π_E (onto E ∩ T_x∂K) and Π_{E^⊥}, both expressed in
/// the boundary sample's tangent frame.
fn tangent_projections(bs: &BoundarySample, e_frame: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    // E contains ν as its first frame column, so the rest spans E ∩ ν^⊥.
    let n = e_frame.nrows();
    let p = e_frame.ncols() - 1;
    let e_tan = e_frame.view((0, 1), (n, p));
    let m_e = bs.tangent_frame.transpose() * e_tan;
    let pi_e = &m_e * m_e.transpose();
    let e_perp = complete_basis(e_frame);
    let m_perp = bs.tangent_frame.transpose() * e_perp;
    let pi_perp = &m_perp * m_perp.transpose();
    (pi_e, pi_perp)
}

/// The full Theorem-B style kernel (sum over a).
pub fn smooth_kernel_general(
    bs: &BoundarySample,
    e_frame: &DMatrix<f64>,
    k: usize,
    p: usize,
    i: usize,
) -> f64 {
    let n = e_frame.nrows();
    let (pi_e, pi_perp) = tangent_projections(bs, e_frame);
    let min_kp = k.min(p);
    let m = k.min(n - 1 - k).min(p).min(n - 1 - p);
    let mut kernel = 0.0;
    for a in (min_kp - m)..=(min_kp - i) {
        let coeff = binomial((min_kp - a) as u64, i as u64) as f64
            * binomial(k as u64, a as u64) as f64;
        let mut slots = Vec::new();
        if n - 1 - k > 0 {
            slots.push((bs.shape_operator.clone(), n - 1 - k));
        }
        if a > 0 {
            slots.push((pi_e.clone(), a));
        }
        if k - a > 0 {
            slots.push((pi_perp.clone(), k - a));
        }
        kernel += coeff
            * mixed_discriminant(&slots).expect("slot multiplicities sum to the tangent dimension");
    }
    kernel
}

/// The collapsed kernel for k ≤ p: C(k,i)·D(S_x[n−k−1], Id[k−i], Π_{E^⊥}[i]).
pub fn smooth_kernel_simplified(
    bs: &BoundarySample,
    e_frame: &DMatrix<f64>,
    k: usize,
    i: usize,
) -> f64 {
    let n = e_frame.nrows();
    let (_, pi_perp) = tangent_projections(bs, e_frame);
    let mut slots = Vec::new();
    if n - 1 - k > 0 {
        slots.push((bs.shape_operator.clone(), n - 1 - k));
    }
    if k - i > 0 {
        slots.push((DMatrix::identity(n - 1, n - 1), k - i));
    }
    if i > 0 {
        slots.push((pi_perp, i));
    }
    binomial(k as u64, i as u64) as f64
        * mixed_discriminant(&slots).expect("slot multiplicities sum to the tangent dimension")
}

/// (−1)^{(n−1)/2} · det(Π_{E^⊥} ∘ S_x : E ∩ T_x∂K → E^⊥), with the bases of
/// E ∩ T_x∂K and E^⊥ oriented so that ℝν(x) ⊕ (E ∩ T_x∂K) ⊕ E^⊥ is a
/// positive decomposition of ℝⁿ.
fn exceptional_smooth_kernel(bs: &BoundarySample, e_frame: &DMatrix<f64>) -> f64 {
    let n = e_frame.nrows();
    let a = (n - 1) / 2;
    let b1 = e_frame.view((0, 1), (n, a)).into_owned();
    let mut b2 = complete_basis(e_frame); // E^⊥, dimension a
    let mut oriented = DMatrix::zeros(n, n);
    oriented.set_column(0, &bs.normal);
    oriented.view_mut((0, 1), (n, a)).copy_from(&b1);
    oriented.view_mut((0, 1 + a), (n, a)).copy_from(&b2);
    if oriented.determinant() < 0.0 {
        let c0 = -b2.column(0).into_owned();
        b2.set_column(0, &c0);
    }
    // S acts on the tangent space: S(u) = T·S_mat·Tᵀu
    let action = &bs.tangent_frame * &bs.shape_operator * bs.tangent_frame.transpose();
    let map = b2.transpose() * action * &b1;
    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
    sign * map.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_total_mass_is_n_kappa_n() {
        let ball = Ellipsoid::unit_ball(3).unwrap();
        let mc = McConfig::with_samples(40_000);
        for (k, p, i) in [(1usize, 1usize, 0usize), (1, 1, 1), (2, 1, 0), (0, 2, 0)] {
            let spec = MeasureSpec::sigma(3, k, p, i).unwrap();
            let r = eval_smooth(&spec, &ball, &TestFunction::one(), &mc, RngStream::new(31))
                .unwrap();
            let want = 4.0 * PI; // n·κ_n = ω_n for n = 3
            assert!(
                (r.estimate - want).abs() < 4.0 * r.std_error + 1e-9,
                "(k,p,i)=({k},{p},{i}): {} ± {}",
                r.estimate,
                r.std_error
            );
        }
    }

    #[test]
    fn radius_scaling_is_exact_under_matched_seeds() {
        let mc = McConfig::with_samples(20_000);
        let stream = RngStream::new(17);
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let unit = eval_smooth(
            &spec,
            &Ellipsoid::unit_ball(3).unwrap(),
            &TestFunction::one(),
            &mc,
            stream,
        )
        .unwrap();
        let r = 2.0;
        let big = eval_smooth(
            &spec,
            &Ellipsoid::ball(3, r).unwrap(),
            &TestFunction::one(),
            &mc,
            stream,
        )
        .unwrap();
        assert_abs_diff_eq!(big.estimate / unit.estimate, r, epsilon = 1e-12);
    }

    #[test]
    fn exceptional_vanishes_on_the_ball() {
        // Π_{E^⊥}∘S_x maps E∩T to its orthocomplement in T when S = Id.
        let ball = Ellipsoid::unit_ball(3).unwrap();
        let spec = MeasureSpec::exceptional(3).unwrap();
        let r = eval_smooth(
            &spec,
            &ball,
            &TestFunction::one(),
            &McConfig::with_samples(5_000),
            RngStream::new(23),
        )
        .unwrap();
        assert!(r.estimate.abs() < 1e-10, "got {}", r.estimate);
    }

    #[test]
    fn simplified_and_general_agree_per_sample() {
        let e = Ellipsoid::with_axes(&[1.0, 1.4, 1.9, 0.8]).unwrap();
        let mut rng = RngStream::new(29).rng();
        for _ in 0..200 {
            let bs = e.boundary_sample(&mut rng).unwrap();
            for (k, p, i) in [(1usize, 2usize, 0usize), (1, 2, 1), (2, 2, 1), (1, 1, 1)] {
                if k > p {
                    continue;
                }
                let e_frame = sample_plane_through(&bs.normal, p + 1, &mut rng);
                let gen = smooth_kernel_general(&bs, &e_frame, k, p, i);
                let simp = smooth_kernel_simplified(&bs, &e_frame, k, i);
                assert!(
                    (gen - simp).abs() <= 1e-9 * (1.0 + gen.abs()),
                    "(k,p,i)=({k},{p},{i}): {gen} vs {simp}"
                );
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ball = Ellipsoid::unit_ball(3).unwrap();
        let spec = MeasureSpec::sigma(4, 1, 1, 0).unwrap();
        assert!(eval_smooth(
            &spec,
            &ball,
            &TestFunction::one(),
            &McConfig::with_samples(10),
            RngStream::new(1)
        )
        .is_err());
    }
}
