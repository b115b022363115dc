//! Executable embodiment of the theorem-level identities: structured
//! pass/fail checks with estimates, expectations, tolerances, and standard
//! errors. Every check is a deterministic function of (seed, parameters).

mod checks;
mod report;
mod suite;

pub use checks::{
    check_aomoto, check_equivariance, check_hinderer_consistency, check_marginal,
    check_positivity, check_rank_basis, TransformMode,
};
pub use report::{CheckReport, Tolerance};
pub use suite::default_suite;
