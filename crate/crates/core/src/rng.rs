//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, replicate, lane)`:
//! the seed picks the key, the replicate picks the 64-bit stream id and the
//! lane picks a disjoint 2^48-word window of that stream. Two streams with
//! different addresses never overlap, so replicates can be scheduled on any
//! number of threads without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const LANE_SHIFT: u32 = 48;

/// Lanes `0..=EPOCH_LANES_END` are reserved for per-epoch noise.
pub const EPOCH_LANES_END: u64 = 1 << 10;
pub const LINEAGE_LANE: u64 = EPOCH_LANES_END + 1;
pub const SAMPLING_LANE: u64 = EPOCH_LANES_END + 2;
pub const SBM_LANE: u64 = EPOCH_LANES_END + 3;
pub const SBM_MASS_LANE: u64 = EPOCH_LANES_END + 4;
/// Free lanes for synthetic data in tests and calibration runs.
pub const AUX_LANE_BASE: u64 = EPOCH_LANES_END + 16;

pub fn stream(seed: u64, replicate: u64, lane: u64) -> StreamRng {
    assert!(lane < (1 << 20), "lane {lane} out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng.set_word_pos(u128::from(lane) << LANE_SHIFT);
    rng
}

pub fn epoch_stream(seed: u64, replicate: u64, epoch: u32) -> StreamRng {
    let lane = u64::from(epoch);
    assert!(lane <= EPOCH_LANES_END);
    stream(seed, replicate, lane)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn first(rng: &mut StreamRng, k: usize) -> Vec<u64> {
        (0..k).map(|_| rng.random()).collect()
    }

    #[test]
    fn same_address_same_draws() {
        assert_eq!(first(&mut stream(7, 3, 2), 16), first(&mut stream(7, 3, 2), 16));
    }

    #[test]
    fn different_addresses_differ() {
        let base = first(&mut stream(7, 3, 2), 4);
        assert_ne!(base, first(&mut stream(8, 3, 2), 4));
        assert_ne!(base, first(&mut stream(7, 4, 2), 4));
        assert_ne!(base, first(&mut stream(7, 3, 3), 4));
    }

    #[test]
    fn lanes_are_disjoint_windows() {
        // lane 1 starts exactly where lane 0 would be after 2^48 words
        let mut a = stream(1, 0, 0);
        a.set_word_pos(1u128 << LANE_SHIFT);
        assert_eq!(first(&mut a, 8), first(&mut stream(1, 0, 1), 8));
    }
}
