//! Simulated bandit with sub-Gaussian arms and per-arm query accounting.
//!
//! Every arm owns its own ChaCha stream keyed by `(seed, arm)`, so the k-th
//! draw of an arm does not depend on how pulls of other arms interleave.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CpeError, Result};
use crate::model::MeanVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    /// `N(μ_a, 1)`.
    #[default]
    Gaussian,
    Noiseless,
    /// Uniform on `[μ_a − h, μ_a + h]`, sub-Gaussian with parameter `h ≤ 1`.
    BoundedUniform { halfwidth: f64 },
}

#[derive(Clone, Debug)]
pub struct BanditEnv {
    mu: MeanVector,
    noise: Noise,
    seed: u64,
    streams: Vec<ChaCha8Rng>,
    counts: Vec<u64>,
}

impl BanditEnv {
    pub fn new(mu: MeanVector, noise: Noise, seed: u64) -> Result<Self> {
        if let Noise::BoundedUniform { halfwidth } = noise {
            if !(0.0..=1.0).contains(&halfwidth) {
                return Err(CpeError::InvalidConfig {
                    field: "noise.halfwidth".into(),
                    reason: format!("{halfwidth} is outside [0, 1]"),
                });
            }
        }
        let streams = (0..mu.arms())
            .map(|arm| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(arm as u64);
                rng
            })
            .collect();
        let counts = vec![0; mu.arms()];
        Ok(Self { mu, noise, seed, streams, counts })
    }

    pub fn gaussian(mu: MeanVector, seed: u64) -> Self {
        Self::new(mu, Noise::Gaussian, seed).expect("gaussian noise has no parameters")
    }

    pub fn noiseless(mu: MeanVector) -> Self {
        Self::new(mu, Noise::Noiseless, 0).expect("noiseless env has no parameters")
    }

    pub fn arms(&self) -> usize {
        self.mu.arms()
    }

    pub fn means(&self) -> &MeanVector {
        &self.mu
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pull(&mut self, arm: usize) -> Result<f64> {
        if arm >= self.arms() {
            return Err(CpeError::Domain(format!("arm {arm} out of range for {} arms", self.arms())));
        }
        self.counts[arm] += 1;
        let mean = self.mu[arm];
        let rng = &mut self.streams[arm];
        Ok(match self.noise {
            Noise::Gaussian => mean + rng.sample::<f64, _>(StandardNormal),
            Noise::Noiseless => mean,
            Noise::BoundedUniform { halfwidth } => mean + halfwidth * (2.0 * rng.random::<f64>() - 1.0),
        })
    }

    /// Sum of `n` pulls of one arm.
    pub fn pull_many(&mut self, arm: usize, n: u64) -> Result<f64> {
        let mut total = 0.0;
        for _ in 0..n {
            total += self.pull(arm)?;
        }
        Ok(total)
    }

    pub fn query_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_queries(&self) -> u64 {
        self.counts.iter().sum()
    }
}
