//! Seeded random streams.
//!
//! Every consumer of randomness (graph placement, Monte Carlo run `r`, the
//! inverse-moment estimate, ...) draws from its own ChaCha stream whose seed is
//! a hash of the master seed and a stream path. Streams never share state, so
//! results do not depend on how runs are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const SENSOR_PLACEMENT: u64 = 0x5E45;
    pub const NOISE: u64 = 0x4E01;
    pub const SIGNAL: u64 = 0x5161;
    pub const MOMENT: u64 = 0xF10A;
    pub const SYNTHETIC: u64 = 0x5E7D;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p).rotate_left(29)))
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}
