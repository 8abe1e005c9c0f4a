//! Seeded random streams.
//!
//! Every independent unit of work (an instance, a sample, a level) draws from
//! its own stream derived from the experiment seed and a path of indices, so
//! results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a child stream from `seed` and a path of stream indices.
pub fn stream(seed: u64, path: &[u64]) -> Rng {
    let mut key = splitmix64(seed);
    for &p in path {
        key = splitmix64(key ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    Rng::seed_from_u64(key)
}

/// Stable 64-bit tag for a clause density, used as a stream index.
pub fn alpha_tag(alpha: f64) -> u64 {
    (alpha * 1e6).round() as i64 as u64
}
