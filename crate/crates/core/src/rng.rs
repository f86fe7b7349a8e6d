//! Seed derivation. Every random draw in the crate is keyed by a
//! `(seed, stream)` pair so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_mul(GOLDEN).wrapping_add(GOLDEN)))
}

/// Hashes a seed together with an integer coordinate vector.
#[inline]
pub fn hash_coords(seed: u64, coords: &[i64]) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for &c in coords {
        h = mix64(h ^ (c as u64).wrapping_mul(GOLDEN));
    }
    h
}

/// Uniform in [0, 1) with 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream))
}
