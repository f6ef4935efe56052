//! Counter-based seed splitting: every work item gets a generator that depends
//! only on the master seed and the item index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for item `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(mix(master).wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Seed for item `index` within a named sub-stream, so two samplers driven by
/// the same master seed do not share randomness.
pub fn derive_stream_seed(master: u64, stream: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, stream ^ 0x5eed_0000_0000_0000), index)
}

pub type Generator = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Generator {
    ChaCha8Rng::seed_from_u64(seed)
}
