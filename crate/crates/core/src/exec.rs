//! Deterministic block-parallel execution.
//!
//! Monte Carlo work is cut into fixed-size blocks; block b consumes the
//! substream derived from (parent stream, b) and the per-block results are
//! reduced in block order. The outcome is therefore a function of
//! (seed, sample count, block size) only — never of the thread count — and
//! the sequential and parallel paths produce bit-identical results.

use crate::grassmann::{RngStream, StreamRng};
use serde::{Deserialize, Serialize};

/// Samples per work block.
pub const DEFAULT_BLOCK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    Sequential,
    /// Rayon data-parallel over blocks; falls back to sequential when the
    /// `parallel` feature is disabled.
    Parallel,
}

/// Applies `f` to the block indices `0..n_blocks`, preserving index order in
/// the returned vector.
pub fn map_blocks<R, F>(mode: ExecMode, n_blocks: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n_blocks).map(f).collect(),
        ExecMode::Parallel => map_blocks_parallel(n_blocks, f),
    }
}

#[cfg(feature = "parallel")]
fn map_blocks_parallel<R, F>(n_blocks: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n_blocks).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_blocks_parallel<R, F>(n_blocks: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    (0..n_blocks).map(f).collect()
}

/// Running mean/variance accumulator with an order-fixed merge.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanAccumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean (sample variance, n−1 denominator).
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Monte Carlo driver: draws `samples` values of `f`, blocked and merged in
/// fixed order. Each block instantiates `stream.substream(block_index)`.
pub fn mc_accumulate<F>(
    mode: ExecMode,
    samples: u64,
    block_size: u64,
    stream: RngStream,
    f: F,
) -> MeanAccumulator
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    if samples == 0 {
        return MeanAccumulator::default();
    }
    let block_size = block_size.max(1);
    let n_blocks = samples.div_ceil(block_size);
    let partials = map_blocks(mode, n_blocks, |b| {
        let mut rng = stream.substream(b).rng();
        let count = if b == n_blocks - 1 {
            samples - b * block_size
        } else {
            block_size
        };
        let mut acc = MeanAccumulator::default();
        for _ in 0..count {
            acc.push(f(&mut rng));
        }
        acc
    });
    let mut total = MeanAccumulator::default();
    for p in &partials {
        total.merge(p);
    }
    total
}
