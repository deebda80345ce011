//! Seed splitting: one root seed fans out to independent named streams.
//!
//! A stream's seed is `splitmix64(root ^ fnv1a64(name))`, so a component's
//! randomness depends only on the root seed and its own name, never on the
//! order in which other components draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive(root: u64, name: &str) -> u64 {
    splitmix64(root ^ fnv1a64(name.as_bytes()))
}

pub fn stream(root: u64, name: &str) -> Rng {
    Rng::seed_from_u64(derive(root, name))
}
