use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussMarkovConfig {
    /// Correlation time, s.
    pub tau_corr: f64,
    /// Stationary standard deviation per axis.
    pub sigma: Vec3,
    #[serde(default)]
    pub seed: u64,
    /// Starting value.
    #[serde(default)]
    pub initial: Vec3,
}

impl GaussMarkovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_corr > 0.0) {
            return Err(Error::Parameter(format!("tau_corr must be > 0, got {}", self.tau_corr)));
        }
        if !self.sigma.iter().all(|&s| s >= 0.0) {
            return Err(Error::Parameter("Gauss–Markov sigma must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// First-order Gauss–Markov vector process with its own seeded generator.
#[derive(Debug, Clone)]
pub struct GaussMarkovProcess {
    pub value: Vec3,
    pub tau_corr: f64,
    pub sigma: Vec3,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl GaussMarkovProcess {
    pub fn new(cfg: &GaussMarkovConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            value: cfg.initial,
            tau_corr: cfg.tau_corr,
            sigma: cfg.sigma,
            seed: cfg.seed,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    /// A process that stays at zero.
    pub fn silent() -> Self {
        Self::new(&GaussMarkovConfig { tau_corr: 1.0, sigma: Vec3::zeros(), seed: 0, initial: Vec3::zeros() })
            .expect("valid constant config")
    }

    /// Exact discretization `x⁺ = a x + σ √(1 − a²) n`, `a = e^{−dt/τ}`.
    pub fn step(&mut self, dt: f64) -> Result<Vec3> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("Gauss–Markov dt must be > 0, got {dt}")));
        }
        let a = (-dt / self.tau_corr).exp();
        let drive = (1.0 - a * a).sqrt();
        for i in 0..3 {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            self.value[i] = a * self.value[i] + self.sigma[i] * drive * n;
        }
        Ok(self.value)
    }
}

/// Functional form of [`GaussMarkovProcess::step`].
pub fn gauss_markov_step(mut p: GaussMarkovProcess, dt: f64) -> Result<GaussMarkovProcess> {
    p.step(dt)?;
    Ok(p)
}
