//! Deterministic randomness.
//!
//! Every stochastic operation in the crate consumes an explicit
//! [`SeedStream`]; nothing reads ambient entropy. Streams can be forked
//! into independent substreams so that, e.g., the baseline and augmented
//! arms of an experiment never share random state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seeded random stream with deterministic forking.
#[derive(Debug, Clone)]
pub struct SeedStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent substream. Forking is a pure function of
    /// `(self.seed, lane)`: it does not consume from, nor depend on, the
    /// parent's position.
    pub fn fork(&self, lane: u64) -> SeedStream {
        SeedStream::new(splitmix64(self.seed ^ splitmix64(lane)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }

    /// Uniform draw from `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        self.rng.gen_range(0..n)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn unit_f64(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform draw from `[-bound, bound]`.
    pub fn symmetric_f64(&mut self, bound: f64) -> f64 {
        self.rng.gen_range(-bound..=bound)
    }

    pub fn bool(&mut self) -> bool {
        self.rng.gen()
    }

    /// A uniform permutation of `0..n` (Fisher–Yates).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.gen_range(0..=i);
            p.swap(i, j);
        }
        p
    }
}
