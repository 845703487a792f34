//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`Rng`], a ChaCha8 stream
//! cipher generator. ChaCha is counter based and platform independent, so a
//! `(seed, stream)` pair reproduces the same draws bit for bit everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64 + set_stream";

/// Independent stream identifiers. Distinct consumers inside one run use
/// distinct streams of the same seed.
pub mod stream {
    pub const ENVIRONMENT: u64 = 0;
    pub const FEATURES: u64 = 1;
    pub const TRAJECTORY: u64 = 2;
    pub const BATCH_INDEX: u64 = 3;
    pub const VARIANCE_PROBE: u64 = 4;
    pub const REWARD_PROBE: u64 = 5;
    pub const OUTPUT_SELECTION: u64 = 6;
    pub const POLICY_GRADIENT: u64 = 7;
    pub const GRADIENT_BOUND: u64 = 8;
}

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
