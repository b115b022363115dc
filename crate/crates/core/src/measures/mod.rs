//! The evaluation engines: the flag area measures S_k^(p),i and the
//! exceptional S̃ on polytopes and on ellipsoids, the classical area-measure
//! baseline S_k, and Hinderer's family S_k^(p).

mod polytope_eval;
mod result;
mod smooth_eval;
mod testfn;

pub use polytope_eval::{classical_area_measure_polytope, eval_polytope, hinderer_measure};

pub(crate) use polytope_eval::exceptional_kernel as exceptional_polytope_kernel;
pub use result::{BodyRef, EvalResult, McConfig};
pub use smooth_eval::{eval_smooth, smooth_kernel_general, smooth_kernel_simplified};
pub use testfn::TestFunction;

use crate::error::Result;
use crate::grassmann::RngStream;

/// Classical k-th surface area measure of a polytope or an ellipsoid against
/// a sphere test function (the p = 0 specialization of the flag family).
pub fn classical_area_measure(
    body: BodyRef<'_>,
    k: usize,
    g: &TestFunction,
    mc: &McConfig,
    stream: RngStream,
) -> Result<EvalResult> {
    match body {
        BodyRef::Polytope(p) => classical_area_measure_polytope(p, k, g, mc, stream),
        BodyRef::Ellipsoid(e) => {
            let spec = crate::grassmann::MeasureSpec::sigma(e.dim(), k, 0, 0)?;
            eval_smooth(&spec, e, g, mc, stream)
        }
    }
}
