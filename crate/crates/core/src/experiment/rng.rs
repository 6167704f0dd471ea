//! Counter-based per-round randomness.
//!
//! Each round owns its own ChaCha8 stream, keyed by the run seed and selected
//! by the round number, so round `r` sees the same variates no matter which
//! worker evaluates it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Keyed generator from which per-round streams are derived.
#[derive(Debug, Clone)]
pub struct RandomnessSource {
    base: ChaCha8Rng,
}

impl RandomnessSource {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, round: u64) -> RoundStream {
        let mut rng = self.base.clone();
        rng.set_stream(round);
        rng.set_word_pos(0);
        RoundStream(rng)
    }
}

/// Independent uniform variates for one round.
#[derive(Debug, Clone)]
pub struct RoundStream(ChaCha8Rng);

impl RoundStream {
    /// Next variate in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}

pub fn derive_round_randomness(seed: u64, round: u64) -> RoundStream {
    RandomnessSource::new(seed).stream(round)
}

/// Every variate a round may consume, drawn in a fixed order whether or not
/// the configured protocol and channel use it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundVariates {
    pub alice_bit: f64,
    pub alice_index: f64,
    pub alice_basis: f64,
    pub rotation_fire: f64,
    pub replacement: f64,
    pub bob_basis: f64,
    pub outcome: f64,
    pub kappa: f64,
    pub phase_sign: f64,
    pub flip: f64,
}

impl RoundVariates {
    pub fn draw(stream: &mut RoundStream) -> Self {
        Self {
            alice_bit: stream.uniform(),
            alice_index: stream.uniform(),
            alice_basis: stream.uniform(),
            rotation_fire: stream.uniform(),
            replacement: stream.uniform(),
            bob_basis: stream.uniform(),
            outcome: stream.uniform(),
            kappa: stream.uniform(),
            phase_sign: stream.uniform(),
            flip: stream.uniform(),
        }
    }
}

/// Maps `u ∈ [0, 1)` to a 1-based index in `1..=n`.
pub fn uniform_index(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1) + 1
}

/// Seed for the `i`-th run of a sweep. Run 0 keeps the master seed.
pub fn sweep_seed(master: u64, i: usize) -> u64 {
    master.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
