//! Seedable, splittable randomness.
//!
//! Every top-level algorithm takes an explicit `u64` seed and builds its
//! random stream here, so runs are reproducible across platforms. Worker
//! threads and retries use [`derive`] to split independent streams off a
//! base seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Deterministic stream for a seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed, e.g. per worker index or retry count.
///
/// SplitMix64 finalizer over the pair; statistically independent streams for
/// distinct `(seed, index)` pairs.
pub fn derive(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x2545_F491_4F6C_DD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
