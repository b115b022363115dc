//! Invariant random sampling on spheres and Grassmannians, plus closed-form
//! constants: c_{n,k,p,i}, Aomoto expectations, and the ball constants κ_n, ω_n.

mod constants;
mod rng;
pub(crate) mod sample;
mod spec;

pub use constants::{
    aomoto_expectation, ball_constants, binomial, james_log_density, measure_constant,
};
pub use rng::{RngStream, StreamRng};
pub use sample::{
    sample_grassmann, sample_grassmann_through, sample_orthogonal, sample_rotation, sample_sphere,
};
pub use spec::{MeasureSpec, Variant};
