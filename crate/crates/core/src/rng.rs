//! Reproducible pseudo-random stream shared by the scenario generator, the
//! rollout engine and the sampled verifier.
//!
//! Algorithm `chacha8-v1`: a ChaCha8 stream keyed with
//! `rand_core::SeedableRng::seed_from_u64(seed)`. Every draw consumes exactly
//! one `u64` word:
//!
//! * `below(n)`   = `(word as u128 * n as u128) >> 64`
//! * `unit()`     = `(word >> 11) as f64 * 2^-53`, in `[0, 1)`
//!
//! Both mappings are plain integer arithmetic, so another implementation of
//! ChaCha8 reproduces the same traces.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GENERATOR_NAME: &str = "chacha8-v1";

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn word(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        ((self.word() as u128 * n as u128) >> 64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from a probability row. Zero-probability entries are never
    /// returned; rounding slack falls on the last positive entry.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.unit();
        let mut acc = 0.0;
        let mut last = None;
        for (i, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = Some(i);
            if u < acc {
                return i;
            }
        }
        last.expect("categorical over a row without positive mass")
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
