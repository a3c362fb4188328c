//! Seeding. Every simulation draws from a `ChaCha8Rng`; replication seeds are
//! derived from `(master_seed, n, r)` by chained SplitMix64 mixing so that
//! tables are reproducible regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// One SplitMix64 output step applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `r` of sample size `n` under `master`.
pub fn split_seed(master: u64, n: u64, r: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ n) ^ r)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
