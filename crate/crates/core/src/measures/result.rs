//! Result records and Monte Carlo configuration.

use serde::{Deserialize, Serialize};

use crate::bodies::{Ellipsoid, Polytope};
use crate::exec::{ExecMode, DEFAULT_BLOCK};
use crate::grassmann::MeasureSpec;

/// Monte Carlo budget and execution mode.
///
/// `samples` is the total budget; polytope engines split it evenly over the
/// k-faces (rounding up). `block` is the number of samples a work block
/// draws from its own substream; together with the seed it fully determines
/// the output, independently of the thread count.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub block: u64,
    pub mode: ExecMode,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: 100_000,
            block: DEFAULT_BLOCK,
            mode: ExecMode::Parallel,
        }
    }
}

impl McConfig {
    pub fn with_samples(samples: u64) -> Self {
        McConfig {
            samples,
            ..Default::default()
        }
    }

    pub fn sequential(samples: u64) -> Self {
        McConfig {
            samples,
            block: DEFAULT_BLOCK,
            mode: ExecMode::Sequential,
        }
    }
}

/// The universal output record of every evaluation engine.
///
/// `samples = 0` flags an exact (non-sampled) path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalResult {
    pub spec: MeasureSpec,
    pub body: String,
    pub engine: String,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// A body the classical baseline can integrate over.
#[derive(Clone, Copy)]
pub enum BodyRef<'a> {
    Polytope(&'a Polytope),
    Ellipsoid(&'a Ellipsoid),
}

pub(crate) fn polytope_label(p: &Polytope) -> String {
    format!("polytope(n={}, vertices={})", p.dim(), p.vertices().len())
}

pub(crate) fn ellipsoid_label(e: &Ellipsoid) -> String {
    format!("ellipsoid(n={})", e.dim())
}
