//! Seeded, splittable random streams.
//!
//! ChaCha supports 2^64 independent streams selected by `set_stream`, which
//! is what makes deterministic parallel Monte Carlo possible: every work
//! block derives its own stream id from (seed, block index) and the draws are
//! bit-for-bit reproducible regardless of thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// The concrete RNG a stream instantiates.
pub type StreamRng = ChaCha12Rng;

/// Identifier of an independent random substream.
///
/// Identical (seed, stream_id) reproduce identical draws bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream_id: 0 }
    }

    /// Derives the `index`-th child stream. Children of distinct parents and
    /// distinct indices are independent for all practical purposes.
    pub fn substream(&self, index: u64) -> Self {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(splitmix64(self.stream_id) ^ index.wrapping_add(1)),
        }
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
