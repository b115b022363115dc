//! Flag area measures on polytopes.
//!
//! The common estimator shape is
//!
//! ```text
//! prefactor · Σ_{F ∈ 𝓕_k(P)} vol_k(F) · ∫_{n(P,F)} ∫_{Gr_{p+1}(v)} f(v,E)·kernel(E,F) dE dv
//! ```
//!
//! with the outer integral sampled by rejection on the unit sphere of
//! F.direction^⊥ and one invariant Grassmannian draw per accepted cone draw.
//! The kernel distinguishes the engines: σ_i(E^⊥, F) for S_k^(p),i,
//! σ̃_{(n−1)/2}(E^⊥, F) for the exceptional measure, and the squared cosine
//! cos²(E^⊥, F) for Hinderer's S_k^(p) — the last computed by the independent
//! Gram-determinant route, never through the angle machinery.
//!
//! Jordan angles are classified inside the (n−1)-dimensional space W = v^⊥:
//! E contains v, so its orthogonal complement in ℝⁿ automatically lies in W,
//! and the Gram entries do not depend on which coordinates are used.
//!
//! Estimates are stratified by face: every face receives its own substream
//! and an even share of the sample budget, and per-face means are combined in
//! lattice order, so (seed, samples, block) determine the output bits.

use nalgebra::{DMatrix, DVector};

use crate::bodies::{ConeTester, Face, Polytope, INCIDENCE_TOL};
use crate::error::{Error, Result};
use crate::exec::mc_accumulate;
use crate::grassmann::sample::{sample_plane_through, gaussian_vector};
use crate::grassmann::{
    ball_constants, binomial, measure_constant, MeasureSpec, RngStream, StreamRng, Variant,
};
use crate::linalg::{complement, complete_basis, sigma_from_cross_gram};
use crate::measures::result::{polytope_label, EvalResult, McConfig};
use crate::measures::testfn::{CompiledFn, TestFunction};

pub(crate) enum PolyKernel {
    Sigma { i: usize },
    Exceptional,
    CosSq,
}

/// Monte Carlo estimate of ∫ f dS_k^(p),i(P, ·) (or the exceptional S̃).
pub fn eval_polytope(
    spec: &MeasureSpec,
    p: &Polytope,
    f: &TestFunction,
    mc: &McConfig,
    stream: RngStream,
) -> Result<EvalResult> {
    spec.validate()?;
    if spec.n != p.dim() {
        return Err(Error::invalid(format!(
            "spec dimension {} does not match the body dimension {}",
            spec.n,
            p.dim()
        )));
    }
    let (kernel, prefactor, engine) = match spec.variant {
        Variant::Sigma { i } => (PolyKernel::Sigma { i }, measure_constant(spec)?, "polytope"),
        Variant::Exceptional => (PolyKernel::Exceptional, 1.0, "polytope"),
    };
    let (estimate, std_error, samples) =
        eval_polytope_raw(p, spec.k, spec.p, kernel, prefactor, f, mc, stream)?;
    Ok(EvalResult {
        spec: *spec,
        body: polytope_label(p),
        engine: engine.to_string(),
        estimate,
        std_error,
        samples,
        seed: stream.seed,
    })
}

/// Hinderer's S_k^(p) with kernel cos²(E^⊥,F) and prefactor
/// C(n−p−1,k)⁻¹·ω_{n−p}/ω_n, for 0 ≤ k ≤ n−p−1. Test functions live on
/// F(n,p+1); the translation to the orthogonal-flag picture is the
/// diffeomorphism (v, E∩v^⊥) ↦ (v, E), under which this engine samples the
/// same flags as [`eval_polytope`].
pub fn hinderer_measure(
    p: &Polytope,
    k: usize,
    pflag: usize,
    f: &TestFunction,
    mc: &McConfig,
    stream: RngStream,
) -> Result<EvalResult> {
    let n = p.dim();
    if pflag >= n || k + pflag > n - 1 {
        return Err(Error::invalid(format!(
            "Hinderer family needs 0 <= k <= n-p-1, got k={k}, p={pflag}, n={n}"
        )));
    }
    let (_, omega_n) = ball_constants(n)?;
    let (_, omega_np) = ball_constants(n - pflag)?;
    let prefactor = omega_np / omega_n / binomial((n - pflag - 1) as u64, k as u64) as f64;
    let (estimate, std_error, samples) =
        eval_polytope_raw(p, k, pflag, PolyKernel::CosSq, prefactor, f, mc, stream)?;
    // echo the closest family member; the engine tag records the normalization
    let spec = MeasureSpec {
        n,
        k,
        p: pflag,
        variant: Variant::Sigma {
            i: k.min(pflag),
        },
    };
    Ok(EvalResult {
        spec,
        body: polytope_label(p),
        engine: "hinderer-polytope".to_string(),
        estimate,
        std_error,
        samples,
        seed: stream.seed,
    })
}

/// Classical S_k of a polytope: C(n−1,k)⁻¹ Σ_F vol_k(F) ∫_{n(P,F)} g(v) dv.
/// No Grassmannian draws are involved; this is the independent baseline the
/// marginal identity is checked against. Facet degree (k = n−1) is exact.
pub fn classical_area_measure_polytope(
    p: &Polytope,
    k: usize,
    g: &TestFunction,
    mc: &McConfig,
    stream: RngStream,
) -> Result<EvalResult> {
    let n = p.dim();
    if k >= n {
        return Err(Error::invalid(format!("need 0 <= k <= n-1, got k={k}, n={n}")));
    }
    if g.has_proj_trace() {
        return Err(Error::invalid(
            "the classical baseline takes a sphere test function (no proj_trace nodes)",
        ));
    }
    let spec = MeasureSpec::sigma(n, k, 0, 0)?;
    let compiled = g.compile(n)?;
    let prefactor = 1.0 / binomial((n - 1) as u64, k as u64) as f64;
    let faces = p.faces(k);

    if k == n - 1 {
        let mut total = 0.0;
        for face in faces {
            total += face.volume * compiled.eval(&p.outward_normal(face)?, None);
        }
        return Ok(EvalResult {
            spec,
            body: polytope_label(p),
            engine: "classical-polytope".to_string(),
            estimate: prefactor * total,
            std_error: 0.0,
            samples: 0,
            seed: stream.seed,
        });
    }

    let per_face = mc.samples.div_ceil(faces.len() as u64).max(1);
    let (_, omega) = ball_constants(n - k)?;
    let mut total = 0.0;
    let mut var = 0.0;
    for (fi, face) in faces.iter().enumerate() {
        let tester = ConeTester::new(p, face, INCIDENCE_TOL);
        let comp = complement(&face.direction);
        let face_stream = stream.substream(fi as u64);
        let acc = mc_accumulate(mc.mode, per_face, mc.block, face_stream, |rng| {
            let u = comp.frame() * unit_gaussian(n - k, rng);
            if tester.contains(&u) {
                compiled.eval(&u, None)
            } else {
                0.0
            }
        });
        total += face.volume * omega * acc.mean();
        var += (face.volume * omega * acc.std_error()).powi(2);
    }
    Ok(EvalResult {
        spec,
        body: polytope_label(p),
        engine: "classical-polytope".to_string(),
        estimate: prefactor * total,
        std_error: prefactor * var.sqrt(),
        samples: per_face * faces.len() as u64,
        seed: stream.seed,
    })
}

fn unit_gaussian(n: usize, rng: &mut StreamRng) -> DVector<f64> {
    loop {
        let v = gaussian_vector(n, rng);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Per-face data the sampling closure needs.
struct FaceContext<'a> {
    face: &'a Face,
    tester: ConeTester,
    /// Frame of F.direction^⊥; the cone lives in its unit sphere.
    comp_frame: DMatrix<f64>,
    /// Outward normal, only for facet degree where the cone is a point.
    normal: Option<DVector<f64>>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn eval_polytope_raw(
    p: &Polytope,
    k: usize,
    pflag: usize,
    kernel: PolyKernel,
    prefactor: f64,
    f: &TestFunction,
    mc: &McConfig,
    stream: RngStream,
) -> Result<(f64, f64, u64)> {
    let n = p.dim();
    let compiled = f.compile(n)?;
    let faces = p.faces(k);
    if faces.is_empty() {
        return Ok((0.0, 0.0, 0));
    }

    // Facet degree forces m = 0 and a constant kernel; without proj_trace
    // nodes nothing is random and the sum is exact.
    let kernel_is_constant_one = match kernel {
        PolyKernel::Sigma { i } => i == 0 && k == n - 1,
        PolyKernel::CosSq => k == n - 1 && pflag == 0,
        PolyKernel::Exceptional => false,
    };
    if kernel_is_constant_one && !f.has_proj_trace() {
        let mut total = 0.0;
        for face in faces {
            total += face.volume * compiled.eval(&p.outward_normal(face)?, None);
        }
        return Ok((prefactor * total, 0.0, 0));
    }

    let per_face = mc.samples.div_ceil(faces.len() as u64).max(1);
    let (_, omega) = ball_constants(n - k)?;
    let mut total = 0.0;
    let mut var = 0.0;
    for (fi, face) in faces.iter().enumerate() {
        let ctx = FaceContext {
            face,
            tester: ConeTester::new(p, face, INCIDENCE_TOL),
            comp_frame: complement(&face.direction).frame().clone(),
            normal: if k == n - 1 {
                Some(p.outward_normal(face)?)
            } else {
                None
            },
        };
        let face_stream = stream.substream(fi as u64);
        let acc = mc_accumulate(mc.mode, per_face, mc.block, face_stream, |rng| {
            sample_value(n, k, pflag, &kernel, &ctx, &compiled, rng)
        });
        let weight = if k == n - 1 { 1.0 } else { omega };
        total += face.volume * weight * acc.mean();
        var += (face.volume * weight * acc.std_error()).powi(2);
    }
    Ok((
        prefactor * total,
        prefactor * var.sqrt(),
        per_face * faces.len() as u64,
    ))
}

fn sample_value(
    n: usize,
    k: usize,
    pflag: usize,
    kernel: &PolyKernel,
    ctx: &FaceContext<'_>,
    f: &CompiledFn,
    rng: &mut StreamRng,
) -> f64 {
    let v = match &ctx.normal {
        Some(normal) => normal.clone(),
        None => {
            let u = &ctx.comp_frame * unit_gaussian(n - k, rng);
            if !ctx.tester.contains(&u) {
                return 0.0;
            }
            u
        }
    };
    let e_frame = sample_plane_through(&v, pflag + 1, rng);
    let kernel_value = match kernel {
        PolyKernel::Sigma { i: 0 } => 1.0,
        PolyKernel::Sigma { i } => {
            let e_perp = complete_basis(&e_frame);
            let gram = e_perp.transpose() * ctx.face.direction.frame();
            sigma_from_cross_gram(&gram, n - 1)
                .expect("forced Jordan cosines deviate from 1")[*i]
        }
        PolyKernel::CosSq => {
            let e_perp = complete_basis(&e_frame);
            crate::linalg::cos_sq_frames(&e_perp, ctx.face.direction.frame())
        }
        PolyKernel::Exceptional => exceptional_kernel(&v, &e_frame, ctx.face),
    };
    kernel_value * f.eval(&v, Some(&e_frame))
}

/// σ̃_{(n−1)/2}(E^⊥, F) inside W = v^⊥, with W oriented so that
/// (v, positive basis of W) is positively oriented in ℝⁿ.
///
/// All determinants only involve inner products of vectors lying in W, so
/// they can be taken in ambient coordinates; the orientation constraint on
/// F^⊥∩W becomes det[v | F^⊥∩W | F] > 0.
pub(crate) fn exceptional_kernel(v: &DVector<f64>, e_frame: &DMatrix<f64>, face: &Face) -> f64 {
    let n = v.len();
    let a = (n - 1) / 2;
    let e_perp = complete_basis(e_frame); // n × a, inside v^⊥
    // F^⊥ ∩ v^⊥ = complement of span(F ∪ {v})
    let f_frame = face.direction.frame();
    let mut fv = DMatrix::zeros(n, a + 1);
    fv.view_mut((0, 0), (n, a)).copy_from(f_frame);
    fv.set_column(a, v);
    let mut f_perp = complete_basis(&fv); // n × a
    let mut oriented = DMatrix::zeros(n, n);
    oriented.set_column(0, v);
    oriented.view_mut((0, 1), (n, a)).copy_from(&f_perp);
    oriented.view_mut((0, 1 + a), (n, a)).copy_from(f_frame);
    if oriented.determinant() < 0.0 {
        let c0 = -f_perp.column(0).into_owned();
        f_perp.set_column(0, &c0);
    }
    let det_into_f = (f_frame.transpose() * &e_perp).determinant();
    let det_into_fperp = (f_perp.transpose() * &e_perp).determinant();
    det_into_f * det_into_fperp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{standard_body, StandardBody};
    use crate::grassmann::sample_sphere;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn cube_edge_measure_is_three_pi() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let mc = McConfig::with_samples(60_000);
        for i in [0usize, 1] {
            let spec = MeasureSpec::sigma(3, 1, 1, i).unwrap();
            let r = eval_polytope(&spec, &cube, &TestFunction::one(), &mc, RngStream::new(7))
                .unwrap();
            assert!(
                (r.estimate - 3.0 * PI).abs() < 4.0 * r.std_error.max(1e-12),
                "i={i}: {} ± {}",
                r.estimate,
                r.std_error
            );
        }
    }

    #[test]
    fn vertex_sum_tiles_the_sphere() {
        // k = 0 with σ_0 ≡ 1: the vertex cones tile S^{n−1}, total ω_n.
        let simplex = standard_body(StandardBody::Simplex, 3, None).unwrap();
        let spec = MeasureSpec::sigma(3, 0, 1, 0).unwrap();
        let mc = McConfig::with_samples(80_000);
        let r = eval_polytope(&spec, &simplex, &TestFunction::one(), &mc, RngStream::new(9))
            .unwrap();
        assert!(
            (r.estimate - 4.0 * PI).abs() < 4.0 * r.std_error,
            "{} ± {}",
            r.estimate,
            r.std_error
        );
    }

    #[test]
    fn exceptional_marginal_vanishes_on_the_cube() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let spec = MeasureSpec::exceptional(3).unwrap();
        let mc = McConfig::with_samples(60_000);
        let r = eval_polytope(&spec, &cube, &TestFunction::one(), &mc, RngStream::new(3))
            .unwrap();
        assert!(
            r.estimate.abs() < 4.0 * r.std_error,
            "{} ± {}",
            r.estimate,
            r.std_error
        );
    }

    #[test]
    fn facet_degree_is_exact() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let r = classical_area_measure_polytope(
            &cube,
            2,
            &TestFunction::one(),
            &McConfig::with_samples(10),
            RngStream::new(1),
        )
        .unwrap();
        assert_eq!(r.samples, 0);
        assert_eq!(r.std_error, 0.0);
        assert_abs_diff_eq!(r.estimate, 6.0, epsilon = 1e-12);
        // and the flag engine agrees exactly there (σ_0 ≡ 1 at facet degree)
        let spec = MeasureSpec::sigma(3, 2, 1, 0).unwrap();
        let rf = eval_polytope(&spec, &cube, &TestFunction::one(), &McConfig::with_samples(10), RngStream::new(1)).unwrap();
        assert_eq!(rf.samples, 0);
        assert_abs_diff_eq!(rf.estimate, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn classical_cube_edges() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let r = classical_area_measure_polytope(
            &cube,
            1,
            &TestFunction::one(),
            &McConfig::with_samples(60_000),
            RngStream::new(11),
        )
        .unwrap();
        assert!(
            (r.estimate - 3.0 * PI).abs() < 4.0 * r.std_error,
            "{} ± {}",
            r.estimate,
            r.std_error
        );
        let bad = TestFunction::proj_trace(&DMatrix::identity(3, 3), 1);
        assert!(classical_area_measure_polytope(
            &cube,
            1,
            &bad,
            &McConfig::with_samples(10),
            RngStream::new(1)
        )
        .is_err());
    }

    #[test]
    fn hinderer_matches_top_sigma_under_matched_seeds() {
        // S_k^(p),m = (ω_n/ω_{n−p}) S_k^(p) holds sample-by-sample.
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let mc = McConfig::with_samples(4_000);
        let stream = RngStream::new(21);
        let f = TestFunction::one();
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let flag = eval_polytope(&spec, &cube, &f, &mc, stream).unwrap();
        let hind = hinderer_measure(&cube, 1, 1, &f, &mc, stream).unwrap();
        let (_, omega3) = ball_constants(3).unwrap();
        let (_, omega2) = ball_constants(2).unwrap();
        let ratio = flag.estimate / hind.estimate;
        assert_abs_diff_eq!(ratio, omega3 / omega2, epsilon = 1e-10);
        assert!(hinderer_measure(&cube, 2, 1, &f, &mc, stream).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let spec = MeasureSpec::sigma(4, 1, 1, 0).unwrap();
        assert!(eval_polytope(
            &spec,
            &cube,
            &TestFunction::one(),
            &McConfig::with_samples(10),
            RngStream::new(1)
        )
        .is_err());
    }

    #[test]
    fn translation_is_bit_identical_and_scaling_exact() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let g = DMatrix::identity(3, 3);
        let t = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let shifted = crate::bodies::transform_body(&cube, &g, &t, 1.0).unwrap();
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let mc = McConfig::with_samples(8_000);
        let stream = RngStream::new(5);
        let f = TestFunction::one();
        let a = eval_polytope(&spec, &cube, &f, &mc, stream).unwrap();
        let b = eval_polytope(&spec, &shifted, &f, &mc, stream).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        // doubling: ratio 2^k, exactly, under matched seeds
        let doubled =
            crate::bodies::transform_body(&cube, &g, &DVector::zeros(3), 2.0).unwrap();
        let c = eval_polytope(&spec, &doubled, &f, &mc, stream).unwrap();
        assert_abs_diff_eq!(c.estimate / a.estimate, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn positivity_of_sigma_measures() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let mut rng = RngStream::new(13).rng();
        let u = sample_sphere(3, &mut rng).unwrap();
        let f = TestFunction::dir_poly(&u, 2);
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let r = eval_polytope(&spec, &cube, &f, &McConfig::with_samples(20_000), RngStream::new(2))
            .unwrap();
        assert!(r.estimate >= -4.0 * r.std_error);
    }
}
