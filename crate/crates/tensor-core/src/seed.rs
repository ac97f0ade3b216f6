//! Root-seed splitting. One experiment seed expands into independent,
//! labeled streams ("init", "gen", "shuffle", ...) so that changing e.g. the
//! data generator never perturbs weight initialization.
//!
//! The rule: `child = splitmix64(root ^ fnv1a(label))`, and the returned RNG
//! is ChaCha8 seeded with that child value. FNV-1a is fixed here rather than
//! `DefaultHasher` so streams are stable across toolchains.

use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for a labeled stream.
pub fn child_seed(root: u64, label: &str) -> u64 {
    splitmix64(root ^ fnv1a(label.as_bytes()))
}

/// Child seed further split by an index (epoch, sample, pair, ...).
pub fn child_seed_indexed(root: u64, label: &str, index: u64) -> u64 {
    splitmix64(child_seed(root, label) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(root, label))
}

pub fn rng_indexed(root: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed_indexed(root, label, index))
}
