//! Splittable, order-independent random streams.
//!
//! Every stream is keyed by `(master seed, experiment id, trial index,
//! sub-stream)` and hashed into a ChaCha seed, so trials can run in any
//! order or in parallel without changing their draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Independent sub-streams used inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Substream {
    Channel,
    /// Transmit data of TX `j` in the estimation block.
    EstimationData(usize),
    /// Thermal noise of RX `i` in the estimation block.
    EstimationNoise(usize),
    /// Signal of interest at RX `i` in the estimation block.
    EstimationSoi(usize),
    MeasurementData(usize),
    MeasurementNoise(usize),
    MeasurementSoi(usize),
    /// Free-form stream for synthetic experiments.
    Aux(u32),
}

impl Substream {
    fn code(self) -> (u8, u64) {
        match self {
            Substream::Channel => (0, 0),
            Substream::EstimationData(j) => (1, j as u64),
            Substream::EstimationNoise(i) => (2, i as u64),
            Substream::EstimationSoi(i) => (3, i as u64),
            Substream::MeasurementData(j) => (4, j as u64),
            Substream::MeasurementNoise(i) => (5, i as u64),
            Substream::MeasurementSoi(i) => (6, i as u64),
            Substream::Aux(k) => (7, k as u64),
        }
    }
}

/// Identifies the random streams of one Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialKey<'a> {
    pub seed: u64,
    pub experiment: &'a str,
    pub trial: u64,
}

impl<'a> TrialKey<'a> {
    pub fn new(seed: u64, experiment: &'a str, trial: u64) -> Self {
        Self {
            seed,
            experiment,
            trial,
        }
    }

    pub fn stream(&self, sub: Substream) -> SimRng {
        let (tag, index) = sub.code();
        let mut hasher = Sha256::new();
        hasher.update(b"fdsi-stream-v1");
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.experiment.len() as u64).to_le_bytes());
        hasher.update(self.experiment.as_bytes());
        hasher.update(self.trial.to_le_bytes());
        hasher.update([tag]);
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }
}
