//! The individual identity checks.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde_json::json;

use crate::bodies::{standard_body, transform_body, Polytope, StandardBody};
use crate::error::{Error, Result};
use crate::exec::{map_blocks, ExecMode, MeanAccumulator, DEFAULT_BLOCK};
use crate::grassmann::sample::{gaussian_matrix, sample_plane_through, sample_stiefel};
use crate::grassmann::{
    aomoto_expectation, ball_constants, sample_rotation, sample_sphere, MeasureSpec, RngStream,
    StreamRng,
};
use crate::linalg::{complete_basis, cos_sq_frames, sigma_from_cross_gram, Subspace};
use crate::measures::{
    classical_area_measure, eval_polytope, eval_smooth, hinderer_measure, BodyRef, McConfig,
    TestFunction,
};
use crate::verify::report::{CheckReport, Tolerance};

/// Monte Carlo means of σ_0..σ_m over invariant Grassmannian pairs, sharing
/// one set of draws across all indices.
pub(crate) fn aomoto_mc(
    nprime: usize,
    p: usize,
    k: usize,
    samples: u64,
    mode: ExecMode,
    stream: RngStream,
) -> Result<Vec<MeanAccumulator>> {
    let m = crate::linalg::jordan_count(nprime, p, k);
    let n_blocks = samples.div_ceil(DEFAULT_BLOCK);
    let partials = map_blocks(mode, n_blocks, |b| {
        let mut rng = stream.substream(b).rng();
        let count = if b == n_blocks - 1 {
            samples - b * DEFAULT_BLOCK
        } else {
            DEFAULT_BLOCK
        };
        let mut accs = vec![MeanAccumulator::default(); m + 1];
        for _ in 0..count {
            let e = sample_stiefel(nprime, p, &mut rng);
            let f = sample_stiefel(nprime, k, &mut rng);
            let gram = e.transpose() * f;
            let sigmas = sigma_from_cross_gram(&gram, nprime)
                .expect("forced Jordan cosines deviate from 1");
            for (i, acc) in accs.iter_mut().enumerate() {
                acc.push(sigmas[i]);
            }
        }
        accs
    });
    let mut total = vec![MeanAccumulator::default(); m + 1];
    for block in &partials {
        for (t, b) in total.iter_mut().zip(block) {
            t.merge(b);
        }
    }
    Ok(total)
}

/// Statistical check of the closed-form Grassmannian expectation of σ_i
/// against the Monte Carlo mean over invariant pairs.
pub fn check_aomoto(
    nprime: usize,
    p: usize,
    k: usize,
    i: usize,
    samples: u64,
    stream: RngStream,
) -> Result<CheckReport> {
    let started = Instant::now();
    let expected = aomoto_expectation(nprime, p, k, i)?;
    let accs = aomoto_mc(nprime, p, k, samples, ExecMode::Parallel, stream)?;
    let acc = &accs[i];
    Ok(CheckReport::build(
        "aomoto",
        json!({"nprime": nprime, "p": p, "k": k, "i": i}),
        vec![acc.mean()],
        vec![expected],
        Tolerance::StdError {
            factor: 4.0,
            std_errors: vec![acc.std_error()],
        },
        samples,
        stream.seed,
        started,
    ))
}

/// Marginal identity: against a sphere test function, the flag engine must
/// reproduce the classical S_k (and the exceptional measure must vanish).
pub fn check_marginal(
    spec: &MeasureSpec,
    body: BodyRef<'_>,
    g: &TestFunction,
    samples: u64,
    stream: RngStream,
) -> Result<CheckReport> {
    let started = Instant::now();
    if g.has_proj_trace() {
        return Err(Error::invalid(
            "the marginal identity needs a test function factoring through the sphere",
        ));
    }
    let mc = McConfig::with_samples(samples);
    let flag = match body {
        BodyRef::Polytope(p) => eval_polytope(spec, p, g, &mc, stream.substream(0))?,
        BodyRef::Ellipsoid(e) => eval_smooth(spec, e, g, &mc, stream.substream(0))?,
    };
    let (observed, expected, ses, total_samples) = if spec.is_exceptional() {
        (
            vec![flag.estimate],
            vec![0.0],
            vec![flag.std_error],
            flag.samples,
        )
    } else {
        let classical = classical_area_measure(body, spec.k, g, &mc, stream.substream(1))?;
        let combined = (flag.std_error.powi(2) + classical.std_error.powi(2)).sqrt();
        (
            vec![flag.estimate],
            vec![classical.estimate],
            vec![combined],
            flag.samples + classical.samples,
        )
    };
    Ok(CheckReport::build(
        "marginal",
        json!({"spec": spec, "body": flag.body, "g": g}),
        observed,
        expected,
        Tolerance::StdError {
            factor: 4.0,
            std_errors: ses,
        },
        total_samples,
        stream.seed,
        started,
    ))
}

/// The group actions whose behavior [`check_equivariance`] verifies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransformMode {
    /// Shift by the integer vector (1, 2, …, n): bit-identical estimates.
    Translate,
    /// Homogeneity: scale by s multiplies the estimate by s^k exactly.
    Scale(f64),
    /// Rotation covariance, statistical gate.
    Rotate,
    /// Reflection antisymmetry of the exceptional measure, statistical gate.
    Reflect,
}

/// Matched-seed equivariance checks on a polytope.
pub fn check_equivariance(
    spec: &MeasureSpec,
    body: &Polytope,
    f: &TestFunction,
    mode: TransformMode,
    samples: u64,
    stream: RngStream,
) -> Result<CheckReport> {
    let started = Instant::now();
    let n = body.dim();
    let mc = McConfig::with_samples(samples);
    let eval_stream = stream.substream(0);
    let base = eval_polytope(spec, body, f, &mc, eval_stream)?;
    let mut group_rng = stream.substream(7).rng();

    let (observed, expected, tolerance, label) = match mode {
        TransformMode::Translate => {
            let t = DVector::from_fn(n, |r, _| (r + 1) as f64);
            let moved = transform_body(body, &DMatrix::identity(n, n), &t, 1.0)?;
            let b = eval_polytope(spec, &moved, f, &mc, eval_stream)?;
            (
                vec![b.estimate],
                vec![base.estimate],
                Tolerance::Absolute { eps: 0.0 },
                "translate",
            )
        }
        TransformMode::Scale(s) => {
            let scaled =
                transform_body(body, &DMatrix::identity(n, n), &DVector::zeros(n), s)?;
            let b = eval_polytope(spec, &scaled, f, &mc, eval_stream)?;
            (
                vec![b.estimate],
                vec![s.powi(spec.k as i32) * base.estimate],
                Tolerance::Relative { eps: 1e-12 },
                "scale",
            )
        }
        TransformMode::Rotate => {
            let g = sample_rotation(n, &mut group_rng);
            let rotated = transform_body(body, &g, &DVector::zeros(n), 1.0)?;
            let b = eval_polytope(spec, &rotated, &f.rotate(&g.transpose()), &mc, eval_stream)?;
            let combined = (base.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            (
                vec![b.estimate],
                vec![base.estimate],
                Tolerance::StdError {
                    factor: 4.0,
                    std_errors: vec![combined],
                },
                "rotate",
            )
        }
        TransformMode::Reflect => {
            if !spec.is_exceptional() {
                return Err(Error::invalid(
                    "reflection antisymmetry is a property of the exceptional measure",
                ));
            }
            let mut g = sample_rotation(n, &mut group_rng);
            let c0 = -g.column(0).into_owned();
            g.set_column(0, &c0); // det g = −1
            let reflected = transform_body(body, &g, &DVector::zeros(n), 1.0)?;
            let b = eval_polytope(spec, &reflected, &f.rotate(&g.transpose()), &mc, eval_stream)?;
            let combined = (base.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            (
                vec![b.estimate],
                vec![-base.estimate],
                Tolerance::StdError {
                    factor: 4.0,
                    std_errors: vec![combined],
                },
                "reflect",
            )
        }
    };
    Ok(CheckReport::build(
        "equivariance",
        json!({"spec": spec, "mode": label, "body": base.body}),
        observed,
        expected,
        tolerance,
        2 * base.samples,
        stream.seed,
        started,
    ))
}

/// Kernel identity σ_m(E^⊥,F) = cos²(E^⊥,F) pointwise on random flag/face
/// configurations, plus the matched-seed engine ratio
/// S_k^(p),m / S_k^(p) = ω_n/ω_{n−p} on the cube.
pub fn check_hinderer_consistency(
    n: usize,
    k: usize,
    p: usize,
    samples: u64,
    stream: RngStream,
) -> Result<CheckReport> {
    let started = Instant::now();
    if p >= n || k + p > n - 1 {
        return Err(Error::invalid(format!(
            "Hinderer range needs k <= n-p-1, got k={k}, p={p}, n={n}"
        )));
    }
    let m = crate::linalg::jordan_count(n - 1, n - 1 - p, k);
    let mut rng = stream.substream(1).rng();
    let mut max_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let v = sample_sphere(n, &mut rng)?;
        let e_frame = sample_plane_through(&v, p + 1, &mut rng);
        let e_perp = complete_basis(&e_frame);
        let w = complete_basis(&DMatrix::from_columns(&[v.clone()]));
        let f_dir = &w * sample_stiefel(n - 1, k, &mut rng);
        let gram = e_perp.transpose() * &f_dir;
        let sigma_m = sigma_from_cross_gram(&gram, n - 1)
            .expect("forced Jordan cosines deviate from 1")[m];
        let cos2 = cos_sq_frames(&e_perp, &f_dir);
        max_dev = max_dev.max((sigma_m - cos2).abs());
    }

    let cube = standard_body(StandardBody::Cube, n, None)?;
    let mc = McConfig::with_samples(samples);
    let f = TestFunction::one();
    let spec = MeasureSpec::sigma(n, k, p, k.min(p))?;
    let flag = eval_polytope(&spec, &cube, &f, &mc, stream.substream(2))?;
    let hind = hinderer_measure(&cube, k, p, &f, &mc, stream.substream(2))?;
    let (_, omega_n) = ball_constants(n)?;
    let (_, omega_np) = ball_constants(n - p)?;
    let ratio = flag.estimate / hind.estimate;
    Ok(CheckReport::build(
        "hinderer_consistency",
        json!({"n": n, "k": k, "p": p}),
        vec![max_dev, ratio],
        vec![0.0, omega_n / omega_np],
        Tolerance::Absolute { eps: 1e-10 },
        10_000 + 2 * flag.samples,
        stream.seed,
        started,
    ))
}

/// All estimates of the σ-variant measures against random squared test
/// functions must be nonnegative (up to 4 standard errors).
pub fn check_positivity(
    spec: &MeasureSpec,
    body: BodyRef<'_>,
    trials: usize,
    samples: u64,
    stream: RngStream,
) -> Result<CheckReport> {
    let started = Instant::now();
    if spec.is_exceptional() {
        return Err(Error::invalid("the exceptional measure is signed, not positive"));
    }
    let mc = McConfig::with_samples(samples);
    let mut observed = Vec::new();
    let mut ses = Vec::new();
    let mut total = 0;
    for t in 0..trials {
        let mut rng = stream.substream(100 + t as u64).rng();
        let f = random_test_function(spec.n, &mut rng, false)?.squared();
        let r = match body {
            BodyRef::Polytope(p) => eval_polytope(spec, p, &f, &mc, stream.substream(t as u64))?,
            BodyRef::Ellipsoid(e) => eval_smooth(spec, e, &f, &mc, stream.substream(t as u64))?,
        };
        observed.push(r.estimate);
        ses.push(r.std_error);
        total += r.samples;
    }
    let expected = vec![0.0; observed.len()];
    Ok(CheckReport::build(
        "positivity",
        json!({"spec": spec, "trials": trials}),
        observed,
        expected,
        Tolerance::NonNegative {
            factor: 4.0,
            std_errors: ses,
        },
        total,
        stream.seed,
        started,
    ))
}

/// A random generator expression; with `require_proj` the result always
/// depends on the plane E, which rank probes need.
pub(crate) fn random_test_function(
    n: usize,
    rng: &mut StreamRng,
    require_proj: bool,
) -> Result<TestFunction> {
    use rand::Rng;
    let u = sample_sphere(n, rng)?;
    let d = 1 + (rng.random::<u32>() % 2);
    let dir = TestFunction::dir_poly(&u, d);
    let mut a = gaussian_matrix(n, n, rng);
    a = (&a + a.transpose()) * 0.5;
    let norm = a.norm();
    if norm > 0.0 {
        a /= norm;
    }
    let proj = TestFunction::proj_trace(&a, 1);
    if require_proj {
        Ok(TestFunction::product(vec![dir, proj]))
    } else {
        match rng.random::<u32>() % 3 {
            0 => Ok(dir),
            1 => Ok(proj),
            _ => Ok(TestFunction::product(vec![dir, proj])),
        }
    }
}

/// Numerical-rank check of linear independence: the probe matrix
/// M[measure][probe] must have rank m+1 (plus one when the S̃ row is
/// included) under the 10⁻²/10⁻³ singular-value thresholds, with every entry
/// resolved to a standard error below 10⁻³ of the largest entry.
///
/// Probes pair random-hull polytopes (random simplices: n+1 Gaussian points)
/// with random even products of dir_poly and proj_trace generators. All rows
/// of a column share one set of (v, E) draws — the kernels are evaluated
/// side by side — which keeps the per-entry noise gate affordable without
/// changing any per-entry estimate or standard error.
pub fn check_rank_basis(
    n: usize,
    k: usize,
    p: usize,
    probes: usize,
    samples: u64,
    stream: RngStream,
    include_exceptional: bool,
) -> Result<CheckReport> {
    let started = Instant::now();
    let base = MeasureSpec::sigma(n, k, p, 0)?;
    let m = base.m();
    if include_exceptional && !(n % 2 == 1 && p == k && k == (n - 1) / 2) {
        return Err(Error::invalid(
            "the exceptional row exists only for odd n with p = k = (n-1)/2",
        ));
    }
    let rank = m + 1 + include_exceptional as usize;
    if probes < rank {
        return Err(Error::invalid(format!(
            "need at least {rank} probes for expected rank {rank}, got {probes}"
        )));
    }
    let mut constants = Vec::new();
    for i in 0..=m {
        constants.push(crate::grassmann::measure_constant(&MeasureSpec::sigma(
            n, k, p, i,
        )?)?);
    }
    if include_exceptional {
        constants.push(1.0);
    }

    let mut bodies = Vec::new();
    let mut fns = Vec::new();
    for j in 0..probes {
        let mut body_rng = stream.substream(1_000 + j as u64).rng();
        let body = standard_body(
            StandardBody::RandomHull { points: n + 1 },
            n,
            Some(&mut body_rng),
        )?;
        let mut f_rng = stream.substream(2_000 + j as u64).rng();
        fns.push(rank_probe_function(n, m, j, &body, k, &mut f_rng)?);
        bodies.push(body);
    }

    // Normalize every probe column to a comparable scale (a const factor is
    // part of the test function): columns of wildly different magnitude
    // would otherwise hide their rank contribution under the shared
    // singular-value thresholds. The pilot scale is deterministic.
    for j in 0..probes {
        let pilot_stream = stream.substream(50_000 + j as u64);
        let pilot = rank_column(
            n,
            k,
            p,
            m,
            include_exceptional,
            &constants,
            &bodies[j],
            &fns[j],
            1 << 15,
            pilot_stream,
        )?;
        let col_max = pilot.0.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        if col_max > 0.0 {
            fns[j] = TestFunction::product(vec![
                TestFunction::constant(1.0 / col_max),
                fns[j].clone(),
            ]);
        }
    }

    let mut ests = vec![vec![0.0f64; probes]; rank];
    let mut ses = vec![vec![f64::INFINITY; probes]; rank];
    let mut budgets = vec![samples.max(1 << 16); probes];
    let mut stale = vec![true; probes];
    let mut total_samples = 0u64;
    let mut noise_ok = false;
    for round in 0..10u64 {
        for col in 0..probes {
            if !stale[col] {
                continue;
            }
            let col_stream = stream.substream(10_000 + col as u64 * 32 + round);
            let col_eval = rank_column(
                n,
                k,
                p,
                m,
                include_exceptional,
                &constants,
                &bodies[col],
                &fns[col],
                budgets[col],
                col_stream,
            )?;
            for row in 0..rank {
                ests[row][col] = col_eval.0[row];
                ses[row][col] = col_eval.1[row];
            }
            total_samples += col_eval.2;
            stale[col] = false;
        }
        let max_entry = ests
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let target = 1e-3 * max_entry;
        let mut worst = 0.0f64;
        for col in 0..probes {
            let col_worst = (0..rank).map(|r| ses[r][col]).fold(0.0f64, f64::max);
            worst = worst.max(col_worst);
            if col_worst > target {
                // quadratic refinement toward the target, at least doubling
                let factor = (col_worst / target).powi(2).clamp(2.0, 16.0);
                budgets[col] = ((budgets[col] as f64 * factor) as u64).min(1 << 28);
                stale[col] = true;
            }
        }
        if worst <= target {
            noise_ok = true;
            break;
        }
    }

    let mat = DMatrix::from_fn(rank, probes, |r, c| ests[r][c]);
    let svd = mat.svd(false, false);
    let mut singulars: Vec<f64> = svd.singular_values.iter().copied().collect();
    singulars.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut report = CheckReport::build(
        "rank_basis",
        json!({"n": n, "k": k, "p": p, "probes": probes, "exceptional_row": include_exceptional}),
        singulars,
        vec![rank as f64],
        Tolerance::RankGate {
            keep: 1e-2,
            drop: 1e-3,
        },
        total_samples,
        stream.seed,
        started,
    );
    if !noise_ok {
        report.passed = false;
    }
    Ok(report)
}

/// Random even probe families for the rank check.
///
/// Plain products of dir_poly and proj_trace excite the σ_0/σ_1 contrast
/// well, but their fiber duals project weakly onto the third kernel
/// direction (an order of magnitude below the kernel-Gram ceiling), so for
/// m ≥ 2 every other column carries a determinant form
/// det(F′ᵀ·Π_{E^⊥}·F′) for a random 2-plane F′ — a σ_2-type functional that
/// expands exactly into sums of proj_trace products via
/// Π_{E^⊥} = Id − Π_E.
fn rank_probe_function(
    n: usize,
    m: usize,
    j: usize,
    body: &Polytope,
    k: usize,
    rng: &mut StreamRng,
) -> Result<TestFunction> {
    let u = sample_sphere(n, rng)?;
    let mut a = gaussian_matrix(n, n, rng);
    a = (&a + a.transpose()) * 0.5;
    let norm = a.norm();
    if norm > 0.0 {
        a /= norm;
    }
    let mut b = gaussian_matrix(n, n, rng);
    b = (&b + b.transpose()) * 0.5;
    let bnorm = b.norm();
    if bnorm > 0.0 {
        b /= bnorm;
    }
    let det_col = m >= 2 && j % 2 == 1;
    if det_col {
        // anchor the determinant form on one of the probe body's own face
        // directions; against that face its fiber dual is exactly x₁·x₂.
        // A high even direction power centered inside that face's normal
        // cone keeps the anchor face dominant in the integral, which is what
        // lifts the third singular direction above the keep threshold.
        let faces = body.faces(k);
        let face = &faces[(j * 7 + 3) % faces.len()];
        let fprime = face.direction.frame().columns(0, 2).into_owned();
        let center = cone_direction(body, face, rng)?;
        return Ok(TestFunction::product(vec![
            TestFunction::dir_poly(&center, 8),
            det_gram_probe(&fprime),
        ]));
    }
    Ok(match j % 4 {
        0 | 1 => TestFunction::product(vec![
            TestFunction::dir_poly(&u, 2),
            TestFunction::proj_trace(&a, 1),
        ]),
        2 => TestFunction::product(vec![
            TestFunction::proj_trace(&a, 1),
            TestFunction::proj_trace(&b, 1),
        ]),
        _ => TestFunction::product(vec![
            TestFunction::dir_poly(&u, 2),
            TestFunction::proj_trace(&a, 2),
        ]),
    })
}

/// A direction in the relative interior of a face's normal cone, found by
/// rejection on the unit sphere of F.direction^⊥.
fn cone_direction(
    body: &Polytope,
    face: &crate::bodies::Face,
    rng: &mut StreamRng,
) -> Result<DVector<f64>> {
    let comp = crate::linalg::complement(&face.direction);
    let tester = crate::bodies::ConeTester::new(body, face, crate::bodies::INCIDENCE_TOL);
    for _ in 0..100_000 {
        let u = comp.frame() * sample_sphere(body.dim() - face.dim, rng)?;
        if tester.contains(&u) {
            return Ok(u);
        }
    }
    Err(Error::inconsistent("normal cone rejection failed to land a direction"))
}

/// det(F′ᵀ·Π_{E^⊥}·F′) for an orthonormal 2-frame F′, written inside the
/// test-function grammar: with N_ab = tr(Π_{E^⊥}·(f_a f_bᵀ + f_b f_aᵀ)/2)
/// the determinant is N₁₁N₂₂ − N₁₂², and each N_ab = tr(A_ab) − tr(Π_E·A_ab).
fn det_gram_probe(fprime: &DMatrix<f64>) -> TestFunction {
    let f1 = fprime.column(0).into_owned();
    let f2 = fprime.column(1).into_owned();
    let a11 = &f1 * f1.transpose();
    let a22 = &f2 * f2.transpose();
    let a12 = (&f1 * f2.transpose() + &f2 * f1.transpose()) * 0.5;
    let n_of = |a: &DMatrix<f64>, trace: f64| {
        TestFunction::sum(vec![
            TestFunction::constant(trace),
            TestFunction::product(vec![
                TestFunction::constant(-1.0),
                TestFunction::proj_trace(a, 1),
            ]),
        ])
    };
    let n11 = n_of(&a11, 1.0);
    let n22 = n_of(&a22, 1.0);
    let n12 = n_of(&a12, 0.0);
    TestFunction::sum(vec![
        TestFunction::product(vec![n11, n22]),
        TestFunction::product(vec![
            TestFunction::constant(-1.0),
            n12.clone(),
            n12,
        ]),
    ])
}

/// One probe column: estimates of every row measure from one shared set of
/// draws. Row i of the result is bit-identical to what `eval_polytope` with
/// the same stream would produce, because the draw sequence does not depend
/// on the kernel.
#[allow(clippy::too_many_arguments)]
fn rank_column(
    n: usize,
    k: usize,
    p: usize,
    m: usize,
    include_exceptional: bool,
    constants: &[f64],
    body: &Polytope,
    f: &TestFunction,
    samples: u64,
    stream: RngStream,
) -> Result<(Vec<f64>, Vec<f64>, u64)> {
    let rows = m + 1 + include_exceptional as usize;
    let compiled = f.compile(n)?;
    let faces = body.faces(k);
    let (_, omega) = ball_constants(n - k)?;
    let mut totals = vec![0.0f64; rows];
    let mut vars = vec![0.0f64; rows];
    let mut used_samples = 0u64;

    // per-face contexts
    struct Ctx {
        tester: crate::bodies::ConeTester,
        comp: DMatrix<f64>,
        normal: Option<DVector<f64>>,
    }
    let ctxs: Vec<Ctx> = faces
        .iter()
        .map(|face| {
            Ok(Ctx {
                tester: crate::bodies::ConeTester::new(body, face, crate::bodies::INCIDENCE_TOL),
                comp: crate::linalg::complement(&face.direction).frame().clone(),
                normal: if k == n - 1 {
                    Some(body.outward_normal(face)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<_>>()?;

    let run_face = |fi: usize, count: u64, block_base: u64| -> Vec<MeanAccumulator> {
        use crate::exec::{map_blocks, DEFAULT_BLOCK};
        let face = &faces[fi];
        let ctx = &ctxs[fi];
        let face_stream = stream.substream(fi as u64);
        let n_blocks = count.div_ceil(DEFAULT_BLOCK);
        let partials = map_blocks(ExecMode::Parallel, n_blocks, |b| {
            let mut rng = face_stream.substream(block_base + b).rng();
            let todo = if b == n_blocks - 1 {
                count - b * DEFAULT_BLOCK
            } else {
                DEFAULT_BLOCK
            };
            let mut accs = vec![MeanAccumulator::default(); rows];
            for _ in 0..todo {
                let v = match &ctx.normal {
                    Some(u) => u.clone(),
                    None => {
                        let mut draw = crate::grassmann::sample::gaussian_vector(n - k, &mut rng);
                        draw /= draw.norm();
                        &ctx.comp * draw
                    }
                };
                if ctx.normal.is_none() && !ctx.tester.contains(&v) {
                    for acc in accs.iter_mut() {
                        acc.push(0.0);
                    }
                    continue;
                }
                let e_frame = sample_plane_through(&v, p + 1, &mut rng);
                let e_perp = complete_basis(&e_frame);
                let gram = e_perp.transpose() * face.direction.frame();
                let sigmas = sigma_from_cross_gram(&gram, n - 1)
                    .expect("forced Jordan cosines deviate from 1");
                let fval = compiled.eval(&v, Some(&e_frame));
                for (i, acc) in accs.iter_mut().take(m + 1).enumerate() {
                    acc.push(sigmas[i] * fval);
                }
                if include_exceptional {
                    let kernel =
                        crate::measures::exceptional_polytope_kernel(&v, &e_frame, face);
                    accs[rows - 1].push(kernel * fval);
                }
            }
            accs
        });
        let mut merged = vec![MeanAccumulator::default(); rows];
        for blockf in &partials {
            for (t, bacc) in merged.iter_mut().zip(blockf) {
                t.merge(bacc);
            }
        }
        merged
    };

    // pilot pass, then allocate the remaining budget across faces in
    // proportion to the observed per-face spread (vol-weighted)
    let pilot = (samples / (4 * faces.len() as u64)).clamp(1024, 1 << 16);
    let mut face_accs: Vec<Vec<MeanAccumulator>> =
        (0..faces.len()).map(|fi| run_face(fi, pilot, 0)).collect();
    used_samples += pilot * faces.len() as u64;
    let remaining = samples.saturating_sub(used_samples);
    if remaining > 0 {
        let spread: Vec<f64> = faces
            .iter()
            .zip(&face_accs)
            .map(|(face, accs)| {
                let sd = accs
                    .iter()
                    .map(|a| a.std_error() * (a.n as f64).sqrt())
                    .fold(0.0f64, f64::max);
                face.volume * sd
            })
            .collect();
        let total_spread: f64 = spread.iter().sum();
        if total_spread > 0.0 {
            let pilot_blocks = pilot.div_ceil(crate::exec::DEFAULT_BLOCK);
            for fi in 0..faces.len() {
                let extra = (remaining as f64 * spread[fi] / total_spread) as u64;
                if extra == 0 {
                    continue;
                }
                // separate block index range keeps the streams disjoint
                let more = run_face(fi, extra, pilot_blocks + (1 << 32));
                for (t, e) in face_accs[fi].iter_mut().zip(&more) {
                    t.merge(e);
                }
                used_samples += extra;
            }
        }
    }

    for (face, accs) in faces.iter().zip(&face_accs) {
        let weight = if k == n - 1 { 1.0 } else { omega };
        for row in 0..rows {
            totals[row] += face.volume * weight * accs[row].mean();
            vars[row] += (face.volume * weight * accs[row].std_error()).powi(2);
        }
    }
    let ests: Vec<f64> = totals
        .iter()
        .zip(constants)
        .map(|(t, c)| c * t)
        .collect();
    let ses: Vec<f64> = vars
        .iter()
        .zip(constants)
        .map(|(v, c)| c * v.sqrt())
        .collect();
    Ok((ests, ses, used_samples))
}

/// Checks used by unit tests to exercise subspace helpers.
#[allow(dead_code)]
pub(crate) fn subspace_of(frame: DMatrix<f64>) -> Subspace {
    Subspace::from_frame(frame).expect("orthonormal")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube3() -> Polytope {
        standard_body(StandardBody::Cube, 3, None).unwrap()
    }

    #[test]
    fn aomoto_check_passes() {
        let r = check_aomoto(3, 1, 1, 1, 60_000, RngStream::new(41)).unwrap();
        assert!(r.passed, "{:?}", r);
        assert_eq!(r.expected[0], 1.0 / 3.0);
        // trivial index: exact
        let r = check_aomoto(5, 2, 3, 0, 1_000, RngStream::new(41)).unwrap();
        assert!(r.passed);
        assert_eq!(r.observed[0], 1.0);
    }

    #[test]
    fn marginal_check_on_cube() {
        let cube = cube3();
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let r = check_marginal(
            &spec,
            BodyRef::Polytope(&cube),
            &TestFunction::one(),
            40_000,
            RngStream::new(43),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
        let exc = MeasureSpec::exceptional(3).unwrap();
        let r = check_marginal(
            &exc,
            BodyRef::Polytope(&cube),
            &TestFunction::one(),
            40_000,
            RngStream::new(44),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
        assert_eq!(r.expected, vec![0.0]);
    }

    #[test]
    fn equivariance_translate_scale() {
        let cube = cube3();
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let f = TestFunction::one();
        let r = check_equivariance(
            &spec,
            &cube,
            &f,
            TransformMode::Translate,
            6_000,
            RngStream::new(45),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
        let r = check_equivariance(
            &spec,
            &cube,
            &f,
            TransformMode::Scale(2.0),
            6_000,
            RngStream::new(46),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn equivariance_rotate_and_reflect() {
        let cube = cube3();
        let spec = MeasureSpec::sigma(3, 1, 1, 0).unwrap();
        let f = TestFunction::one();
        let r = check_equivariance(
            &spec,
            &cube,
            &f,
            TransformMode::Rotate,
            30_000,
            RngStream::new(47),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
        let exc = MeasureSpec::exceptional(3).unwrap();
        let mut rng = RngStream::new(52).rng();
        let f = random_test_function(3, &mut rng, true).unwrap();
        let r = check_equivariance(
            &exc,
            &cube,
            &f,
            TransformMode::Reflect,
            30_000,
            RngStream::new(48),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
        // reflect needs the exceptional measure
        assert!(check_equivariance(
            &spec,
            &cube,
            &f,
            TransformMode::Reflect,
            1_000,
            RngStream::new(48)
        )
        .is_err());
    }

    #[test]
    fn hinderer_check() {
        let r = check_hinderer_consistency(3, 1, 1, 8_000, RngStream::new(49)).unwrap();
        assert!(r.passed, "{:?}", r);
        assert!((r.expected[1] - 2.0).abs() < 1e-12);
        assert!(check_hinderer_consistency(4, 2, 2, 1_000, RngStream::new(1)).is_err());
    }

    #[test]
    fn positivity_check() {
        let cube = cube3();
        let spec = MeasureSpec::sigma(3, 1, 1, 1).unwrap();
        let r = check_positivity(
            &spec,
            BodyRef::Polytope(&cube),
            4,
            15_000,
            RngStream::new(50),
        )
        .unwrap();
        assert!(r.passed, "{:?}", r);
        let exc = MeasureSpec::exceptional(3).unwrap();
        assert!(
            check_positivity(&exc, BodyRef::Polytope(&cube), 1, 100, RngStream::new(1)).is_err()
        );
    }

    #[test]
    fn rank_check_rejects_too_few_probes() {
        assert!(check_rank_basis(4, 1, 1, 1, 1_000, RngStream::new(1), false).is_err());
        assert!(check_rank_basis(4, 1, 1, 8, 1_000, RngStream::new(1), true).is_err());
    }
}
