//! Seed derivation and portable random draws.
//!
//! Every random choice in the crate flows through a [`ChaCha8Rng`] seeded via
//! [`derive_seed`], and index draws use the raw 64-bit stream directly, so a
//! run with a given master seed reproduces its outputs bit-for-bit regardless
//! of thread count or dependency upgrades.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 finalizer.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the role label.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives the seed of an independent stream from the master seed, a role
/// label, and an index. Adding a new role never perturbs existing streams.
pub fn derive_seed(master: u64, role: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(role.as_bytes())) ^ index)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `0..bound`; `bound` must be nonzero. The modulo bias is
/// below 2^-50 for the bounds used in this crate.
pub fn uniform_index(rng: &mut ChaCha8Rng, bound: usize) -> usize {
    debug_assert!(bound > 0);
    (rng.next_u64() % bound as u64) as usize
}

/// In-place Fisher-Yates shuffle driven by the raw stream.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_index(rng, i + 1);
        items.swap(i, j);
    }
}

/// Fair coin.
pub fn coin(rng: &mut ChaCha8Rng) -> bool {
    rng.next_u64() & 1 == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(1, "mapping", 0);
        let b = derive_seed(1, "mapping", 1);
        let c = derive_seed(1, "random", 0);
        assert_eq!(a, derive_seed(1, "mapping", 0));
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn shuffle_is_reproducible() {
        let mut first: Vec<u32> = (0..20).collect();
        let mut second: Vec<u32> = (0..20).collect();
        shuffle(&mut rng_from(42), &mut first);
        shuffle(&mut rng_from(42), &mut second);
        assert_eq!(first, second);
        assert_ne!(first, (0..20).collect::<Vec<u32>>());
    }
}
