//! Seed derivation. Every random stream in a simulation is derived from one
//! 64-bit seed so that runs are reproducible bit for bit.
//!
//! Splitting rule: a child seed is `splitmix64(parent ^ fnv1a64(label))`,
//! where `label` is a byte string naming the stream (for a network link,
//! `from ++ 0x00 ++ to`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn split_seed(parent: u64, label: &[u8]) -> u64 {
    splitmix64(parent ^ fnv1a64(label))
}

pub fn stream(parent: u64, label: &[u8]) -> SimRng {
    SimRng::seed_from_u64(split_seed(parent, label))
}
