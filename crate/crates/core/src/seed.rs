//! Seed derivation. Every stochastic component takes an explicit `u64` seed
//! and child seeds are derived by mixing, so any record can be regenerated
//! on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a sequence of words.
pub fn derive(parent: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(mix64(parent), |acc, &w| mix64(acc ^ mix64(w)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
