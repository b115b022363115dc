//! Deterministic linear-algebra kernels.
//!
//! Everything here is a pure function of its inputs: orthonormal frames and
//! complements, Jordan (principal) angles between subspaces, the invariants
//! σ_i and σ̃_a built from them, and normalized mixed discriminants.

mod angles;
mod frames;
mod mixed;

pub use angles::{
    cos_sq, elementary_symmetric, principal_angles, sigma_all, sigma_elem,
    sigma_from_cross_gram, sigma_tilde, sigma_tilde_oriented, AngleSpectrum,
};
pub use frames::{
    complement, complete_basis, jordan_count, mgs_orthonormalize, orthonormal_frame,
    orthonormal_frame_of,
    OrientedSubspace, Subspace, FRAME_ORTHO_TOL, RANK_REL_TOL,
};
pub use mixed::mixed_discriminant;

pub(crate) use angles::cos_sq_frames;
