//! Deterministic seed derivation.
//!
//! Every randomized operation in the crate takes an explicit `u64` seed.
//! A run funnels all randomness through one master seed and derives
//! independent per-purpose streams from it, so changing one consumer never
//! perturbs another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; full-avalanche mixing of a 64-bit word.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over a label, used to keep distinct purposes on distinct streams.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed for a named purpose.
pub fn derive(master: u64, label: &str) -> u64 {
    mix(master ^ label_hash(label))
}

/// Derives a child seed for a named purpose plus a counter (fold index,
/// iteration number, sample index, ...).
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    mix(master ^ label_hash(label) ^ mix(index))
}

/// The crate-wide RNG: seeded ChaCha8, reproducible across platforms.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
