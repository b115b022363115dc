//! Geometry of the integration domains: polytopes with full face lattices and
//! normal cones, and ellipsoids as the smooth bodies (exact Gauss map, shape
//! operator, and boundary-area weights).

mod ellipsoid;
mod polytope;

pub use ellipsoid::{BoundarySample, Ellipsoid};
pub use polytope::{
    build_polytope, build_polytope_with_limit, integrate_normal_cone, normal_cone_contains,
    standard_body, transform_body, ConeTester, Face, Facet, Polytope, StandardBody,
    DEFAULT_VERTEX_LIMIT, INCIDENCE_TOL,
};
