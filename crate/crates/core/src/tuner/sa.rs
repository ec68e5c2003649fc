use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box constraints on a decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// Lyapunov gains `k₁, k₂ ∈ [0.01, 3]` and transient duration
    /// `T ∈ [7.2, 72]` s.
    pub fn transient() -> Self {
        Self { lower: vec![0.01, 0.01, 7.2], upper: vec![3.0, 3.0, 72.0] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::Config("bounds need matching, non-empty lower and upper vectors".into()));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("bounds of variable {i} are not ordered: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn clip(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaConfig {
    pub initial_temperature: f64,
    /// Geometric cooling factor per iteration, in (0, 1).
    pub cooling: f64,
    pub iterations: usize,
    /// Gaussian proposal standard deviation per decision variable.
    pub step_scales: Vec<f64>,
    /// Proposals shrink with `√(temperature / initial)` down to this
    /// fraction of `step_scales`.
    #[serde(default = "default_min_step_fraction")]
    pub min_step_fraction: f64,
    pub seed: u64,
}

fn default_min_step_fraction() -> f64 {
    0.05
}

impl SaConfig {
    /// Desk-scale transient tuning over `[k₁, k₂, T]`.
    pub fn transient(seed: u64) -> Self {
        Self {
            initial_temperature: 0.05,
            cooling: 0.997,
            iterations: 2000,
            step_scales: vec![0.3, 0.3, 6.0],
            min_step_fraction: default_min_step_fraction(),
            seed,
        }
    }

    /// Science-phase gain tuning. Costs there are a few thousandths, so the
    /// temperature starts low and cools by two decades over the run.
    pub fn science(seed: u64) -> Self {
        let iterations = 300;
        Self {
            initial_temperature: 1e-4,
            cooling: 0.01f64.powf(1.0 / iterations as f64),
            iterations,
            step_scales: vec![0.3; 3],
            min_step_fraction: default_min_step_fraction(),
            seed,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::Config(format!("initial temperature must be > 0, got {}", self.initial_temperature)));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::Config(format!("cooling must lie in (0, 1), got {}", self.cooling)));
        }
        if self.step_scales.len() != dim || !self.step_scales.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("need {dim} positive step scales, got {:?}", self.step_scales)));
        }
        if !(self.min_step_fraction > 0.0 && self.min_step_fraction <= 1.0) {
            return Err(Error::Config(format!("min_step_fraction must lie in (0, 1], got {}", self.min_step_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaResult {
    pub best: Vec<f64>,
    pub best_cost: f64,
    /// Best cost after each iteration, starting with the initial point.
    pub history: Vec<f64>,
    pub accepted: usize,
    /// Candidates whose objective was not finite.
    pub rejected_non_finite: usize,
}

/// Simulated annealing with Metropolis acceptance, geometric cooling and
/// Gaussian proposals clipped to `bounds`.
pub fn simulated_annealing<F>(mut objective: F, bounds: &Bounds, initial: &[f64], cfg: &SaConfig) -> Result<SaResult>
where
    F: FnMut(&[f64]) -> f64,
{
    bounds.validate()?;
    cfg.validate(bounds.dim())?;
    if initial.len() != bounds.dim() {
        return Err(Error::Parameter(format!("initial point has {} entries, bounds {}", initial.len(), bounds.dim())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = initial.to_vec();
    bounds.clip(&mut current);
    let mut current_cost = objective(&current);
    let mut rejected_non_finite = 0;
    if !current_cost.is_finite() {
        log::debug!("annealing start point {current:?} has non-finite cost");
        rejected_non_finite += 1;
        current_cost = f64::INFINITY;
    }
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(best_cost);
    let mut accepted = 0;
    let mut temperature = cfg.initial_temperature;

    let mut candidate = current.clone();
    for _ in 0..cfg.iterations {
        let shrink = (temperature / cfg.initial_temperature).sqrt().max(cfg.min_step_fraction);
        for ((c, x), s) in candidate.iter_mut().zip(&current).zip(&cfg.step_scales) {
            let n: f64 = StandardNormal.sample(&mut rng);
            *c = x + s * shrink * n;
        }
        bounds.clip(&mut candidate);
        let cost = objective(&candidate);
        // the uniform draw is consumed every iteration to keep the stream aligned
        let u: f64 = rng.random();
        if !cost.is_finite() {
            log::debug!("annealing candidate {candidate:?} rejected: non-finite cost {cost}");
            rejected_non_finite += 1;
        } else if cost <= current_cost || u < ((current_cost - cost) / temperature).exp() {
            current.copy_from_slice(&candidate);
            current_cost = cost;
            accepted += 1;
            if cost < best_cost {
                best.copy_from_slice(&candidate);
                best_cost = cost;
            }
        }
        history.push(best_cost);
        temperature *= cfg.cooling;
    }
    Ok(SaResult { best, best_cost, history, accepted, rejected_non_finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quadratic_cfg(iterations: usize, seed: u64) -> SaConfig {
        SaConfig {
            initial_temperature: 1.0,
            cooling: 0.998,
            iterations,
            step_scales: vec![0.5],
            min_step_fraction: 0.02,
            seed,
        }
    }

    #[test]
    fn finds_the_minimum_of_a_convex_quadratic() {
        let bounds = Bounds::new(vec![-5.0], vec![5.0]).unwrap();
        let r = simulated_annealing(|x| (x[0] - 1.7).powi(2) + 0.3, &bounds, &[-4.0], &quadratic_cfg(5000, 4)).unwrap();
        assert!((r.best[0] - 1.7).abs() < 1e-2, "{:?}", r.best);
        assert!(r.best_cost >= 0.3);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let bounds = Bounds::transient();
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] - 0.5).powi(2) + 0.01 * x[2];
        let cfg = SaConfig::transient(77);
        let a = simulated_annealing(f, &bounds, &bounds.midpoint(), &cfg).unwrap();
        let b = simulated_annealing(f, &bounds, &bounds.midpoint(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_iterations_return_the_initial_point() {
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let cfg = SaConfig { iterations: 0, step_scales: vec![0.1, 0.1], ..quadratic_cfg(0, 1) };
        let r = simulated_annealing(|x| x[0] + x[1], &bounds, &[0.25, 0.75], &cfg).unwrap();
        assert_eq!(r.best, vec![0.25, 0.75]);
        assert_eq!(r.history, vec![1.0]);
    }

    #[test]
    fn non_finite_candidates_are_rejected() {
        let bounds = Bounds::new(vec![-1.0], vec![1.0]).unwrap();
        let r = simulated_annealing(
            |x| if x[0] > 0.0 { f64::NAN } else { x[0] * x[0] },
            &bounds,
            &[-0.5],
            &quadratic_cfg(500, 2),
        )
        .unwrap();
        assert!(r.rejected_non_finite > 0);
        assert!(r.best[0] <= 0.0 && r.best_cost.is_finite());
    }

    #[test]
    fn bad_configs_are_refused() {
        let bounds = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let f = |x: &[f64]| x[0];
        assert!(simulated_annealing(f, &bounds, &[0.5], &SaConfig { cooling: 1.0, ..quadratic_cfg(10, 0) }).is_err());
        assert!(
            simulated_annealing(f, &bounds, &[0.5], &SaConfig { step_scales: vec![], ..quadratic_cfg(10, 0) }).is_err()
        );
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn history_is_non_increasing_and_in_bounds(seed in 0u64..1000, a in -3.0..3.0f64, b in 0.1..4.0f64) {
            let bounds = Bounds::transient();
            let f = |x: &[f64]| (x[0] - a).powi(2) + b * (x[1] - 1.0).abs() + (x[2] - 30.0).powi(2).sqrt();
            let cfg = SaConfig { iterations: 300, ..SaConfig::transient(seed) };
            let r = simulated_annealing(f, &bounds, &bounds.midpoint(), &cfg).unwrap();
            prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(bounds.contains(&r.best));
            prop_assert_eq!(*r.history.last().unwrap(), r.best_cost);
        }
    }
}
