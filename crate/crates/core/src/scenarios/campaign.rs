use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tuner::{
    percentile_stats, sample_campaign, tune_science, tune_transient, Bounds, DatasetRow, PercentileStats, PlantConfig,
    SaConfig, ScenarioDistributions, ScenarioSample, ScienceLaw, TunedPlan, DEFAULT_MODE_BINS,
};

/// Smallest campaign whose percentile statistics are reported.
pub const MIN_CAMPAIGN_SCENARIOS: usize = 50;

/// Monte-Carlo tuning of the transient phase: every sampled scenario gets
/// its own annealed `[k₁, k₂, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransientCampaign {
    pub scenarios: usize,
    pub distributions: ScenarioDistributions,
    pub plant: PlantConfig,
    /// Annealing schedule; scenario `i` runs with seed `sa.seed + i`.
    pub sa: SaConfig,
    pub bounds: Bounds,
    /// Two-sided percentile of the statistics, e.g. 99.
    pub percentile: f64,
    /// Permit fewer than [`MIN_CAMPAIGN_SCENARIOS`] (smoke runs).
    pub allow_small: bool,
}

impl Default for TransientCampaign {
    /// 200 scenarios at 2000 annealing iterations each.
    fn default() -> Self {
        Self {
            scenarios: 200,
            distributions: ScenarioDistributions::default(),
            plant: PlantConfig::default(),
            sa: SaConfig::transient(0),
            bounds: Bounds::transient(),
            percentile: 99.0,
            allow_small: false,
        }
    }
}

/// Monte-Carlo tuning of the science-phase gains over a fixed window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScienceCampaign {
    pub scenarios: usize,
    pub distributions: ScenarioDistributions,
    pub plant: PlantConfig,
    pub law: ScienceLaw,
    /// Gain box; `None` selects the law's default box.
    pub bounds: Option<Bounds>,
    /// Observation window, s.
    pub duration: f64,
    pub sa: SaConfig,
    /// Run every scenario against the same disturbance draw, so tuned
    /// gains depend only on the scenario features.
    pub disturbance_seed: Option<u64>,
    pub percentile: f64,
    pub allow_small: bool,
}

impl Default for ScienceCampaign {
    fn default() -> Self {
        Self {
            scenarios: 400,
            distributions: ScenarioDistributions::science(),
            plant: PlantConfig::science(),
            law: ScienceLaw::Smc,
            bounds: None,
            duration: 60.0,
            sa: SaConfig::science(0),
            disturbance_seed: Some(99),
            percentile: 99.0,
            allow_small: false,
        }
    }
}

/// Percentile statistics of the tuned scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub requested: usize,
    pub tuned: usize,
    /// Scenarios whose tuning diverged, by index; left out of every
    /// statistic and of the dataset.
    pub excluded: Vec<usize>,
    pub percentile: f64,
    /// Energy, J.
    pub energy: PercentileStats,
    /// Terminal error, degrees.
    pub error_deg: PercentileStats,
    /// Terminal body rate per axis, deg/s.
    pub omega_f_deg: [PercentileStats; 3],
    /// One entry per decision variable.
    pub decision: Vec<PercentileStats>,
}

/// Tuned scenarios, their dataset rows and the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub summary: CampaignSummary,
    pub scenarios: Vec<ScenarioSample>,
    /// Same order as `scenarios`, excluded entries included.
    pub plans: Vec<TunedPlan>,
    /// Dataset rows of the kept scenarios.
    pub rows: Vec<DatasetRow>,
}

fn check_size(n: usize, allow_small: bool) -> Result<()> {
    if n == 0 || (!allow_small && n < MIN_CAMPAIGN_SCENARIOS) {
        return Err(Error::Config(format!("a campaign needs at least {MIN_CAMPAIGN_SCENARIOS} scenarios, got {n}")));
    }
    Ok(())
}

/// Runs `f` over the scenarios, on `jobs` threads when given and on the
/// global pool otherwise. Output order follows the input.
fn tune_all<F>(scenarios: &[ScenarioSample], jobs: Option<usize>, f: F) -> Result<Vec<TunedPlan>>
where
    F: Fn(usize, &ScenarioSample) -> Result<TunedPlan> + Sync,
{
    let run = || scenarios.par_iter().enumerate().map(|(i, s)| f(i, s)).collect::<Result<Vec<_>>>();
    match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn summarize(scenarios: &[ScenarioSample], plans: &[TunedPlan], p: f64) -> Result<(CampaignSummary, Vec<DatasetRow>)> {
    let mut excluded = Vec::new();
    let mut kept: Vec<(&ScenarioSample, &TunedPlan)> = Vec::new();
    for (i, (s, plan)) in scenarios.iter().zip(plans).enumerate() {
        if plan.diverged || !plan.cost.is_finite() {
            log::warn!("scenario {i} excluded: tuning diverged");
            excluded.push(i);
        } else {
            kept.push((s, plan));
        }
    }
    if kept.is_empty() {
        return Err(Error::Empty("campaign: every scenario diverged"));
    }
    let stats = |v: Vec<f64>| percentile_stats(&v, p, DEFAULT_MODE_BINS);
    let axis = |a: usize| stats(kept.iter().map(|(_, t)| t.terminal.omega[a].to_degrees()).collect());
    let dim = kept[0].1.decision.len();
    let summary = CampaignSummary {
        requested: scenarios.len(),
        tuned: kept.len(),
        excluded,
        percentile: p,
        energy: stats(kept.iter().map(|(_, t)| t.cost.energy).collect())?,
        error_deg: stats(kept.iter().map(|(_, t)| t.cost.error_deg).collect())?,
        omega_f_deg: [axis(0)?, axis(1)?, axis(2)?],
        decision: (0..dim).map(|j| stats(kept.iter().map(|(_, t)| t.decision[j]).collect())).collect::<Result<_>>()?,
    };
    let rows = kept.iter().map(|(s, t)| t.row(s)).collect();
    Ok((summary, rows))
}

/// Samples `cfg.scenarios` scenarios from `seed`, anneals each one and
/// summarizes the tuned costs.
pub fn run_transient_campaign(cfg: &TransientCampaign, seed: u64, jobs: Option<usize>) -> Result<CampaignResult> {
    check_size(cfg.scenarios, cfg.allow_small)?;
    cfg.plant.validate()?;
    cfg.sa.validate(cfg.bounds.dim())?;
    let scenarios = sample_campaign(&cfg.distributions, cfg.scenarios, seed)?;
    let plans = tune_all(&scenarios, jobs, |i, s| {
        let sa = SaConfig { seed: cfg.sa.seed.wrapping_add(i as u64), ..cfg.sa.clone() };
        tune_transient(s, &cfg.plant, &sa, &cfg.bounds)
    })?;
    let (summary, rows) = summarize(&scenarios, &plans, cfg.percentile)?;
    Ok(CampaignResult { summary, scenarios, plans, rows })
}

/// Science-phase counterpart of [`run_transient_campaign`].
pub fn run_science_campaign(cfg: &ScienceCampaign, seed: u64, jobs: Option<usize>) -> Result<CampaignResult> {
    check_size(cfg.scenarios, cfg.allow_small)?;
    cfg.plant.validate()?;
    let bounds = cfg.bounds.clone().unwrap_or_else(|| cfg.law.bounds());
    cfg.sa.validate(bounds.dim())?;
    let mut scenarios = sample_campaign(&cfg.distributions, cfg.scenarios, seed)?;
    if let Some(d) = cfg.disturbance_seed {
        scenarios.iter_mut().for_each(|s| s.seed = d);
    }
    let plans = tune_all(&scenarios, jobs, |i, s| {
        let sa = SaConfig { seed: cfg.sa.seed.wrapping_add(i as u64), ..cfg.sa.clone() };
        tune_science(s, cfg.law, &bounds, cfg.duration, &cfg.plant, &sa)
    })?;
    let (summary, rows) = summarize(&scenarios, &plans, cfg.percentile)?;
    Ok(CampaignResult { summary, scenarios, plans, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> TransientCampaign {
        TransientCampaign {
            scenarios: 6,
            sa: SaConfig { iterations: 40, ..SaConfig::transient(0) },
            allow_small: true,
            ..TransientCampaign::default()
        }
    }

    #[test]
    fn small_campaigns_need_explicit_permission() {
        let cfg = TransientCampaign { allow_small: false, ..smoke() };
        assert!(matches!(run_transient_campaign(&cfg, 0, Some(1)), Err(Error::Config(_))));
    }

    #[test]
    fn smoke_campaign_yields_one_row_per_kept_scenario() {
        let r = run_transient_campaign(&smoke(), 4, Some(2)).unwrap();
        assert_eq!(r.summary.requested, 6);
        assert_eq!(r.summary.tuned + r.summary.excluded.len(), 6);
        assert_eq!(r.rows.len(), r.summary.tuned);
        assert_eq!(r.summary.decision.len(), 3);
        for (row, plan) in r.rows.iter().zip(&r.plans) {
            assert!(row.is_finite());
            assert!((7.2..=72.0).contains(&plan.duration));
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let a = run_transient_campaign(&smoke(), 9, Some(1)).unwrap();
        let b = run_transient_campaign(&smoke(), 9, Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn science_campaign_shares_the_disturbance_draw_and_pins_the_layer() {
        let cfg = ScienceCampaign {
            scenarios: 3,
            duration: 10.0,
            sa: SaConfig { iterations: 20, ..SaConfig::science(0) },
            allow_small: true,
            ..ScienceCampaign::default()
        };
        let r = run_science_campaign(&cfg, 1, Some(1)).unwrap();
        assert!(r.scenarios.iter().all(|s| s.seed == 99));
        assert!(r.rows.iter().all(|row| row.targets[4] == crate::tuner::SCIENCE_BOUNDARY_LAYER));
    }
}
