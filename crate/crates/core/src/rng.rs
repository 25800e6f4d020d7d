//! Seeded random streams.
//!
//! Every matrix is drawn from a single ChaCha8 stream seeded from a 64-bit
//! value. Independent trials get their seeds from [`trial_seed`], a bijective
//! mix of `(master_seed, trial)`, so seeds never collide within a run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn splitmix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `k`. For a fixed master seed this is injective in `k`.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for auxiliary draws (e.g. truncation moments) that must not
/// consume the matrix stream.
pub fn auxiliary_stream(seed: u64, salt: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(salt)))
}
