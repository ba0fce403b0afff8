//! Seeded random number generation.
//!
//! Every randomized routine takes an explicit generator. A single `u64` seed
//! is split into independent streams of a counter-based ChaCha generator so
//! that, e.g., data generation and anchor initialization never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CmknRng = ChaCha8Rng;

/// Stream identifiers used by the library and CLI.
pub mod stream {
    pub const SYNTHETIC: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const ANCHORS: u64 = 3;
    pub const DENSE_INIT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const FOLDS: u64 = 6;
    pub const RESAMPLE: u64 = 7;
}

/// Generator for `stream` derived from `seed`.
pub fn seeded(seed: u64, stream: u64) -> CmknRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
