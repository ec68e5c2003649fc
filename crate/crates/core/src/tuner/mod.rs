//! Monte-Carlo scenario sampling, closed-loop cost evaluation, simulated
//! annealing, NSGA-II with a Pareto archive, percentile statistics and
//! dataset export.

mod dataset;
mod evaluate;
mod moga;
mod plan;
mod sa;
mod sampling;
mod stats;

pub use dataset::{
    export_dataset, split_dataset, Dataset, DatasetRow, Normalization, NormalizationFile, HELDOUT_FILE,
    NORMALIZATION_FILE, SCIENCE_SMC_TARGETS, TARGET_DIM, TRAIN_FILE, TRANSIENT_TARGETS,
};
pub use evaluate::{
    evaluate, evaluate_chain, leg_seed, scalarize, simulate_attitude, trapezoid, AttitudeLaw, AttitudeStep, CostVector,
    Evaluation, PhaseLeg, PlantConfig,
};
pub use moga::{dominates, moga, MogaConfig, ParetoArchive, ParetoEntry};
pub use plan::{
    science_front, transient_law, tune_science, tune_transient, ScienceLaw, TunedPlan, SCIENCE_BOUNDARY_LAYER,
};
pub use sa::{simulated_annealing, Bounds, SaConfig, SaResult};
pub use sampling::{
    sample_campaign, sample_scenario, Normal, ScenarioDistributions, ScenarioSample, Uniform, FEATURE_DIM,
    FEATURE_NAMES,
};
pub use stats::{percentile, percentile_stats, PercentileStats, DEFAULT_MODE_BINS};
