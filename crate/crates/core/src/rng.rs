//! Deterministic seed derivation. Every random stream in a run is keyed by
//! `(run seed, key)` so results do not depend on iteration order or on how
//! replicates are scheduled across threads.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub type Stream = Pcg64Mcg;

/// Key reserved for the stream that draws initial traits.
pub const INIT_KEY: u64 = u64::MAX;
/// Key reserved for post-run sampling of individuals.
pub const SAMPLE_KEY: u64 = u64::MAX - 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, key: u64) -> u64 {
    splitmix64(seed ^ splitmix64(key))
}

pub fn stream(seed: u64, key: u64) -> Stream {
    Pcg64Mcg::seed_from_u64(derive_seed(seed, key))
}
