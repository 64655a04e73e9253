//! Deterministic stream derivation: every sampler and every benchmark trial
//! draws from a ChaCha stream seeded by mixing the master seed with the
//! stream's coordinates, so trials are order-independent under parallelism.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Mix an ordered list of seed components into a single 64-bit seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut acc = 0x243f6a8885a308d3u64; // arbitrary nonzero start
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}

/// A counter-based generator seeded from mixed components.
pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::RngCore;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(&[7, 1]).next_u64()).collect();
        assert!(a.iter().all(|&x| x == a[0]));
        assert_ne!(stream(&[7, 1]).next_u64(), stream(&[7, 2]).next_u64());
        assert_ne!(stream(&[7, 1]).next_u64(), stream(&[8, 1]).next_u64());
    }
}
