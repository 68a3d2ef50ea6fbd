//! Reproducible random streams.
//!
//! A [`RandomSource`] is a `(root_seed, stream_id)` pair that seeds a ChaCha8
//! generator with the root seed and selects the stream by id. Sweeps derive a
//! substream per task with [`RandomSource::substream`], which mixes the parent
//! stream id with a task key through SplitMix64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub root_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RandomSource {
    pub fn new(root_seed: u64) -> Self {
        Self {
            root_seed,
            stream_id: 0,
        }
    }

    pub fn with_stream(root_seed: u64, stream_id: u64) -> Self {
        Self {
            root_seed,
            stream_id,
        }
    }

    /// Child stream for task `key`.
    pub fn substream(&self, key: u64) -> Self {
        Self {
            root_seed: self.root_seed,
            stream_id: splitmix64(splitmix64(self.stream_id) ^ key),
        }
    }

    /// Child stream for a multi-part key such as `(cell, repetition)`.
    pub fn substream_path(&self, keys: &[u64]) -> Self {
        keys.iter().fold(*self, |s, &k| s.substream(k))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
