//! Explicit, splittable random state. Nothing in the crate draws from a
//! global generator.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngState(ChaCha8Rng);

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Draws a fresh key from `self` and derives `streams` independent
    /// generators from it, one ChaCha stream each.
    pub fn split(&mut self, streams: usize) -> Vec<RngState> {
        let key = self.0.next_u64();
        (0..streams)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                rng.set_stream(i as u64);
                RngState(rng)
            })
            .collect()
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}
