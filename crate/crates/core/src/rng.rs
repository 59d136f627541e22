//! Seeded random streams.
//!
//! Every randomized operation takes an explicit `&mut impl Rng`. Monte Carlo
//! trials get their own stream derived from a hash of the experiment seed and
//! the trial coordinates, so adding axis values or trials never perturbs the
//! draws of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive a stream seed from a base seed and a sequence of coordinates.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix64(seed), |acc, &c| mix64(acc ^ mix64(c)))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one Monte Carlo trial.
pub fn trial_stream(seed: u64, axis_value: f64, trial_index: u64) -> StreamRng {
    stream(derive_seed(seed, &[axis_value.to_bits(), trial_index]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: u64 = trial_stream(7, 20.0, 3).random();
        let b: u64 = trial_stream(7, 20.0, 3).random();
        let c: u64 = trial_stream(7, 20.0, 4).random();
        let d: u64 = trial_stream(7, 25.0, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn coordinate_order_matters() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
    }
}
