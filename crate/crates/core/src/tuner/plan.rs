//! Per-scenario tuning of the transient (Lyapunov) and science (sliding
//! mode or PD) phases.

use serde::{Deserialize, Serialize};

use super::dataset::{DatasetRow, TARGET_DIM};
use super::evaluate::{evaluate, scalarize, AttitudeLaw, CostVector, Evaluation, PlantConfig};
use super::moga::{moga, MogaConfig, ParetoArchive};
use super::sa::{simulated_annealing, Bounds, SaConfig, SaResult};
use super::sampling::ScenarioSample;
use crate::controllers::{LyapunovGains, PdGains, SmcAttitudeGains};
use crate::dynamics::BodyState;
use crate::error::{Error, Result};
use crate::mathcore::Vec3;

/// Feedback law family tuned in the science phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScienceLaw {
    /// Decision `[k_smc, Z, ε]`, the same on every axis.
    Smc,
    /// Decision `[P, D]`.
    Pd,
}

/// Boundary-layer thickness held fixed while tuning sliding-mode gains.
pub const SCIENCE_BOUNDARY_LAYER: f64 = 0.2601;

impl ScienceLaw {
    /// Gain box `[0.01, 3]` on every gain.
    pub fn full_bounds(self) -> Bounds {
        let dim = match self {
            ScienceLaw::Smc => 3,
            ScienceLaw::Pd => 2,
        };
        Bounds { lower: vec![0.01; dim], upper: vec![3.0; dim] }
    }

    /// Default tuning box. Inside the boundary layer the sliding-mode law
    /// depends on `Z` and `ε` only through `Z/ε`, so `ε` is pinned to
    /// [`SCIENCE_BOUNDARY_LAYER`] and only `[k_smc, Z]` are searched.
    pub fn bounds(self) -> Bounds {
        let mut b = self.full_bounds();
        if self == ScienceLaw::Smc {
            b.lower[2] = SCIENCE_BOUNDARY_LAYER;
            b.upper[2] = SCIENCE_BOUNDARY_LAYER;
        }
        b
    }

    pub fn law(self, x: &[f64]) -> AttitudeLaw {
        match self {
            ScienceLaw::Smc => AttitudeLaw::Smc(SmcAttitudeGains::from_triplet([x[0], x[1], x[2]])),
            ScienceLaw::Pd => AttitudeLaw::Pd(PdGains { p: x[0], d: x[1] }),
        }
    }
}

/// Lyapunov law of a transient decision `[k₁, k₂, T]`.
pub fn transient_law(x: &[f64]) -> AttitudeLaw {
    AttitudeLaw::Lyapunov(LyapunovGains { k1: x[0], k2: x[1] })
}

/// Tuned plan of one scenario and what it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedPlan {
    /// Decision vector: `[k₁, k₂, T]` for the transient phase, gains for
    /// the science phase.
    pub decision: Vec<f64>,
    /// Phase duration, s.
    pub duration: f64,
    pub cost: CostVector,
    pub objective: f64,
    pub terminal: BodyState,
    pub diverged: bool,
    pub rejected_non_finite: usize,
}

impl TunedPlan {
    /// Surrogate targets `[E, e°, d₀, d₁, d₂]` where `d` is the decision.
    pub fn targets(&self) -> [f64; TARGET_DIM] {
        let d = &self.decision;
        [self.cost.energy, self.cost.error_deg, d[0], d[1], d.get(2).copied().unwrap_or(self.duration)]
    }

    pub fn row(&self, scenario: &ScenarioSample) -> DatasetRow {
        DatasetRow { features: scenario.features(), targets: self.targets() }
    }
}

fn finish(
    scenario: &ScenarioSample,
    law: AttitudeLaw,
    duration: f64,
    sa: &SaResult,
    plant: &PlantConfig,
) -> Result<TunedPlan> {
    let ev: Evaluation = evaluate(scenario, &law, duration, plant)?;
    Ok(TunedPlan {
        decision: sa.best.clone(),
        duration,
        cost: ev.cost,
        objective: sa.best_cost,
        terminal: ev.terminal,
        diverged: ev.diverged || !sa.best_cost.is_finite(),
        rejected_non_finite: sa.rejected_non_finite,
    })
}

/// Anneals `[k₁, k₂, T]` on `w₁E + w₂e° + w₃T` for one scenario.
pub fn tune_transient(
    scenario: &ScenarioSample,
    plant: &PlantConfig,
    sa: &SaConfig,
    bounds: &Bounds,
) -> Result<TunedPlan> {
    if bounds.dim() != 3 {
        return Err(Error::Config("transient bounds must cover [k1, k2, T]".into()));
    }
    let objective = |x: &[f64]| match evaluate(scenario, &transient_law(x), x[2], plant) {
        Ok(ev) => scalarize(&ev.cost, x[2], &scenario.w),
        Err(e) => {
            log::warn!("transient evaluation failed: {e}");
            f64::NAN
        }
    };
    let result = simulated_annealing(objective, bounds, &bounds.midpoint(), sa)?;
    finish(scenario, transient_law(&result.best), result.best[2], &result, plant)
}

/// Anneals science gains inside `bounds` on `w₁E + w₂e°` over a fixed
/// window.
pub fn tune_science(
    scenario: &ScenarioSample,
    law: ScienceLaw,
    bounds: &Bounds,
    duration: f64,
    plant: &PlantConfig,
    sa: &SaConfig,
) -> Result<TunedPlan> {
    if bounds.dim() != law.full_bounds().dim() {
        return Err(Error::Config(format!("{law:?} gain bounds must have {} entries", law.full_bounds().dim())));
    }
    let w = Vec3::new(scenario.w.x, scenario.w.y, 0.0);
    let objective = |x: &[f64]| match evaluate(scenario, &law.law(x), duration, plant) {
        Ok(ev) => scalarize(&ev.cost, duration, &w),
        Err(e) => {
            log::warn!("science evaluation failed: {e}");
            f64::NAN
        }
    };
    let result = simulated_annealing(objective, bounds, &bounds.midpoint(), sa)?;
    finish(scenario, law.law(&result.best), duration, &result, plant)
}

/// `(E, e°)` Pareto front of science gains inside `bounds` for one scenario.
pub fn science_front(
    scenario: &ScenarioSample,
    law: ScienceLaw,
    bounds: &Bounds,
    duration: f64,
    plant: &PlantConfig,
    cfg: &MogaConfig,
) -> Result<ParetoArchive> {
    let objective = |x: &[f64]| match evaluate(scenario, &law.law(x), duration, plant) {
        Ok(ev) => [ev.cost.energy, ev.cost.error_deg],
        Err(_) => [f64::NAN, f64::NAN],
    };
    moga(objective, bounds, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::Quaternion;

    fn scenario() -> ScenarioSample {
        ScenarioSample {
            x0: BodyState::attitude(Quaternion::new(0.3, -0.2, 0.5, 0.6).normalized(), Vec3::new(0.01, 0.0, -0.01)),
            xf: BodyState::attitude(Quaternion::identity(), Vec3::zeros()),
            w: Vec3::new(1.0, 10.0, 0.003),
            seed: 21,
        }
    }

    #[test]
    fn transient_tuning_beats_the_box_midpoint() {
        let s = scenario();
        let plant = PlantConfig::default();
        let bounds = Bounds::transient();
        let sa = SaConfig { iterations: 200, ..SaConfig::transient(1) };
        let plan = tune_transient(&s, &plant, &sa, &bounds).unwrap();
        let mid = bounds.midpoint();
        let ev = evaluate(&s, &transient_law(&mid), mid[2], &plant).unwrap();
        assert!(plan.objective <= scalarize(&ev.cost, mid[2], &s.w));
        assert!(bounds.contains(&plan.decision));
        assert_eq!(plan.duration, plan.decision[2]);
        let t = plan.targets();
        assert_eq!(&t[2..], &plan.decision[..]);
        assert!((plan.objective - scalarize(&plan.cost, plan.duration, &s.w)).abs() <= 1e-12);
    }

    #[test]
    fn science_targets_carry_the_three_smc_gains() {
        let s = ScenarioSample {
            x0: BodyState::attitude(Quaternion::from_axis_angle(Vec3::x(), 1e-3), Vec3::zeros()),
            ..scenario()
        };
        let sa = SaConfig { iterations: 50, step_scales: vec![0.3; 3], ..SaConfig::transient(2) };
        let bounds = ScienceLaw::Smc.bounds();
        let plan = tune_science(&s, ScienceLaw::Smc, &bounds, 20.0, &PlantConfig::default(), &sa).unwrap();
        assert_eq!(plan.decision.len(), 3);
        assert_eq!(&plan.targets()[2..], &plan.decision[..]);
        assert!(bounds.contains(&plan.decision));
        assert_eq!(plan.decision[2], SCIENCE_BOUNDARY_LAYER);
        assert!(tune_science(&s, ScienceLaw::Pd, &bounds, 20.0, &PlantConfig::default(), &sa).is_err());
    }

    #[test]
    fn science_front_is_non_dominated() {
        let s = ScenarioSample {
            x0: BodyState::attitude(Quaternion::from_axis_angle(Vec3::y(), 2e-3), Vec3::zeros()),
            ..scenario()
        };
        let cfg = MogaConfig { population: 8, generations: 3, ..MogaConfig::default() };
        let front =
            science_front(&s, ScienceLaw::Pd, &ScienceLaw::Pd.bounds(), 10.0, &PlantConfig::default(), &cfg).unwrap();
        assert!(!front.is_empty() && front.is_non_dominated());
    }
}
