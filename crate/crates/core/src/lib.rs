//! Numerical engine for SO(n)-covariant flag area measures.
//!
//! A flag area measure assigns to every convex body a signed measure on the
//! flag manifold F(n, p+1) of pairs (unit vector v, (p+1)-plane E containing
//! v). This crate evaluates the three-parameter family S_k^(p),i — whose
//! polytope kernel is the i-th elementary symmetric polynomial in the squared
//! cosines of the Jordan angles between E^⊥ and the face direction — together
//! with the exceptional odd-dimensional measure S̃, the classical surface area
//! measures S_k, and Hinderer's two-parameter family S_k^(p).
//!
//! The crate is organized along the pipeline:
//!
//! * [`linalg`] — frames, principal (Jordan) angles, the invariants σ_i and
//!   σ̃_a, mixed discriminants;
//! * [`grassmann`] — seeded invariant sampling on spheres and Grassmannians,
//!   plus every closed-form constant (c_{n,k,p,i}, Aomoto expectations, κ_n,
//!   ω_n);
//! * [`bodies`] — polytopes with full face lattices and normal cones, and
//!   ellipsoids with exact Gauss map and shape operator;
//! * [`measures`] — the Monte Carlo evaluation engines;
//! * [`verify`] — machine checks for the identities the measures satisfy.
//!
//! All estimators are deterministic functions of an explicit [`grassmann::RngStream`];
//! Monte Carlo work is split into fixed blocks that are reduced in a fixed
//! order, so results are bit-identical whether a run is sequential or
//! parallel (`parallel` feature, enabled by default).

pub mod bodies;
pub mod error;
pub mod exec;
pub mod grassmann;
pub mod linalg;
pub mod measures;
pub mod verify;

pub use error::{Error, Result};

// temporary experiment hooks
#[doc(hidden)]
pub fn grassmann_stiefel(n: usize, p: usize, rng: &mut grassmann::StreamRng) -> nalgebra::DMatrix<f64> {
    grassmann::sample::sample_stiefel(n, p, rng)
}
#[doc(hidden)]
pub fn grassmann_plane_through(v: &nalgebra::DVector<f64>, d: usize, rng: &mut grassmann::StreamRng) -> nalgebra::DMatrix<f64> {
    grassmann::sample::sample_plane_through(v, d, rng)
}
