//! Counter-based seed derivation.
//!
//! Every random draw in a sweep comes from a generator seeded by mixing the
//! sweep seed with the indices of the draw, so results never depend on how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// SplitMix64 finalizer.
#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of counters into a fresh seed.
pub fn derive(base: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(splitmix(base), |acc, &c| splitmix(acc ^ splitmix(c.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
