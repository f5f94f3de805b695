//! Seeded, counter-based random streams.
//!
//! Every consumer derives its own stream from a 64-bit seed and a stream
//! label, so results never depend on how work is partitioned.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// Stream labels, kept distinct so two consumers never share draws.
pub mod stream {
    pub const SHAPE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const PATCH: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SPHERE: u64 = 5;
    pub const BASELINE: u64 = 6;
    pub const THEORY: u64 = 7;
    pub const TRAIN: u64 = 8;
}

/// Generator for `(seed, stream)`. Distinct pairs give independent sequences.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix a seed with a sub-index (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
