//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream whose seed is a SplitMix64 mix of the caller's seed and a
//! context tuple, so results never depend on iteration or thread order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 finalization round.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`: `h = splitmix64(h ^ splitmix64(part))` for each part.
pub fn mix(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Per-window seed used by dataset generation: `mix(base, [class, replica])`.
pub fn window_seed(base_seed: u64, class_index: usize, replica: usize) -> u64 {
    mix(base_seed, &[class_index as u64, replica as u64])
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Domain tags so derived streams for different purposes never collide.
pub(crate) mod tag {
    pub const SPLIT: u64 = 0x0053_504C_4954;
    pub const ATTACK: u64 = 0x4154_5441_434B;
    pub const INIT: u64 = 0x494E_4954;
    pub const BATCH: u64 = 0x0042_4154_4348;
    pub const PGD: u64 = 0x0050_4744;
    pub const EVAL: u64 = 0x4556_414C;
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn window_seeds_are_distinct_over_a_large_grid() {
        let mut seen = HashSet::new();
        for c in 0..25 {
            for r in 0..2000 {
                assert!(seen.insert(window_seed(42, c, r)));
            }
        }
    }

    #[test]
    fn mix_depends_on_order() {
        assert_ne!(mix(1, &[2, 3]), mix(1, &[3, 2]));
    }
}
