//! The seeded generator behind every split and sampling decision.
//!
//! ChaCha8 keyed through `SeedableRng::seed_from_u64`; bounded integers by
//! rejection sampling on 64-bit outputs; shuffles are Fisher-Yates from the
//! last element down. All three pieces are value-stable, so a seed pins the
//! result.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SplitRng(ChaCha8Rng);

impl SplitRng {
    pub fn new(seed: u64) -> SplitRng {
        SplitRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let x = self.0.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
