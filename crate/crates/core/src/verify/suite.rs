//! The default desk-scale verification suite.

use crate::bodies::{standard_body, StandardBody};
use crate::error::Result;
use crate::grassmann::{MeasureSpec, RngStream};
use crate::measures::{BodyRef, TestFunction};
use crate::verify::checks::{
    check_aomoto, check_equivariance, check_hinderer_consistency, check_marginal,
    check_positivity, check_rank_basis, TransformMode,
};
use crate::verify::report::CheckReport;

/// Runs every check family at default desk-scale parameters for 3 ≤ n ≤ n_max.
///
/// `samples` scales the per-check Monte Carlo budgets. Each check receives
/// its own substream, so re-running with the same seed reproduces every
/// report (up to `runtime_ms`).
pub fn default_suite(n_max: usize, samples: u64, stream: RngStream) -> Result<Vec<CheckReport>> {
    let n_max = n_max.max(3);
    let mut reports = Vec::new();
    let mut sub = 0u64;
    let mut next = || {
        sub += 1;
        stream.substream(sub)
    };

    // closed-form expectations vs Monte Carlo on the Grassmannian
    for (nprime, p, k, i) in [(3, 1, 1, 1), (4, 2, 2, 1), (5, 2, 2, 2), (5, 2, 3, 1)] {
        if nprime > n_max {
            continue;
        }
        reports.push(check_aomoto(nprime, p, k, i, 2 * samples, next())?);
    }

    for n in 3..=n_max {
        let cube = standard_body(StandardBody::Cube, n, None)?;
        let simplex = standard_body(StandardBody::Simplex, n, None)?;
        let one = TestFunction::one();

        // marginal identity on both bodies, a spread of specs
        let mut specs = vec![
            MeasureSpec::sigma(n, 1, 1, 0)?,
            MeasureSpec::sigma(n, 1, 1, 1)?,
        ];
        if n >= 4 {
            specs.push(MeasureSpec::sigma(n, 2, 2, 1)?);
        }
        if n % 2 == 1 {
            specs.push(MeasureSpec::exceptional(n)?);
        }
        for spec in &specs {
            reports.push(check_marginal(
                spec,
                BodyRef::Polytope(&cube),
                &one,
                samples,
                next(),
            )?);
            reports.push(check_marginal(
                spec,
                BodyRef::Polytope(&simplex),
                &one,
                samples,
                next(),
            )?);
        }

        // equivariance gates
        let spec = MeasureSpec::sigma(n, 1, 1, 1)?;
        for mode in [
            TransformMode::Translate,
            TransformMode::Scale(2.0),
            TransformMode::Rotate,
        ] {
            reports.push(check_equivariance(&spec, &cube, &one, mode, samples, next())?);
        }
        if n % 2 == 1 {
            let exc = MeasureSpec::exceptional(n)?;
            let mut rng = next().rng();
            let f = crate::verify::checks::random_test_function(n, &mut rng, true)?;
            reports.push(check_equivariance(
                &exc,
                &cube,
                &f,
                TransformMode::Reflect,
                samples,
                next(),
            )?);
        }

        // Hinderer consistency where the range permits
        reports.push(check_hinderer_consistency(n, 1, 1, samples, next())?);
        if n >= 5 {
            reports.push(check_hinderer_consistency(n, 2, 2, samples, next())?);
        }

        // positivity on the cube and on the unit ball
        reports.push(check_positivity(
            &MeasureSpec::sigma(n, 1, 1, 1)?,
            BodyRef::Polytope(&cube),
            4,
            samples,
            next(),
        )?);
        let ball = crate::bodies::Ellipsoid::unit_ball(n)?;
        let smooth_spec = if n >= 4 {
            MeasureSpec::sigma(n, 2, 1, 1)?
        } else {
            MeasureSpec::sigma(n, 1, 1, 1)?
        };
        reports.push(check_positivity(
            &smooth_spec,
            BodyRef::Ellipsoid(&ball),
            2,
            samples,
            next(),
        )?);
    }

    // rank/basis at the small corner
    reports.push(check_rank_basis(3, 1, 1, 8, 1 << 16, next(), true)?);
    if n_max >= 4 {
        reports.push(check_rank_basis(4, 1, 1, 8, 1 << 16, next(), false)?);
    }

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_runs_and_reports() {
        let reports = default_suite(3, 12_000, RngStream::new(0xF1A6)).unwrap();
        assert!(reports.len() > 10);
        for r in &reports {
            assert!(r.passed, "failed: {} {:?}", r.check_id, r.params);
        }
        // determinism of everything except runtime
        let again = default_suite(3, 12_000, RngStream::new(0xF1A6)).unwrap();
        for (a, b) in reports.iter().zip(&again) {
            assert_eq!(a.check_id, b.check_id);
            assert_eq!(a.observed, b.observed);
            assert_eq!(a.expected, b.expected);
            assert_eq!(a.passed, b.passed);
        }
    }
}
