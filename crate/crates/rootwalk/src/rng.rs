//! Counter-based per-path seeding.
//!
//! Path `i` of a run with master seed `s` always draws from
//! `ChaCha8Rng::seed_from_u64(path_seed(s, i))`, so results do not depend on
//! how paths are distributed over worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for path `index` under `master_seed`.
pub fn path_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// RNG for one path.
pub fn path_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(path_seed(master_seed, index))
}
