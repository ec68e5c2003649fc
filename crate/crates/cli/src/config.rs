//! Strict TOML run configuration. Every section is optional and falls back
//! to the library defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use supctl_core::controllers::{PdGains, SmcAttitudeGains};
use supctl_core::mathcore::Vec3;
use supctl_core::scenarios::{
    AuvScenario, MissionRun, RelPosScenario, ScienceCampaign, ScienceScenario, TransientCampaign, REFERENCE_PD_GAINS,
    REFERENCE_SMC_GAINS,
};
use supctl_core::surrogate::{TrainConfig, DEFAULT_HIDDEN};
use supctl_core::tuner::{MogaConfig, ScienceLaw};

/// Configuration problem reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalConfig {
    /// Output root; runs go to `<out>/<command>-s<seed>` unless `--out`
    /// names the run directory.
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub log_level: String,
    /// Overrides the mission catalog's time scale when set.
    pub time_scale: Option<f64>,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self { out: None, seed: 0, log_level: "info".into(), time_scale: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub science: ScienceScenario,
    pub smc_gains: SmcAttitudeGains,
    pub pd_gains: PdGains,
    /// `[w_E, w_e, w_T]` for the reported objectives.
    pub weights: Vec3,
    pub relpos: RelPosScenario,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            science: ScienceScenario::default(),
            smc_gains: SmcAttitudeGains::from_triplet(REFERENCE_SMC_GAINS),
            pd_gains: PdGains { p: REFERENCE_PD_GAINS[0], d: REFERENCE_PD_GAINS[1] },
            weights: Vec3::new(1.0, 10.0, 0.0),
            relpos: RelPosScenario::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    /// Simulated annealing of `[k₁, k₂, T]` per sampled scenario.
    Transient,
    /// Simulated annealing of the science gains per sampled scenario.
    Science,
    /// NSGA-II `(E, e)` front of the science gains on one scenario.
    Moga,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MogaSection {
    pub config: MogaConfig,
    pub law: ScienceLaw,
    pub scenario: ScienceScenario,
    pub weights: Vec3,
}

impl Default for MogaSection {
    fn default() -> Self {
        Self {
            config: MogaConfig::default(),
            law: ScienceLaw::Smc,
            scenario: ScienceScenario { duration: 60.0, ..ScienceScenario::default() },
            weights: Vec3::new(1.0, 10.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneConfig {
    pub mode: TuneMode,
    pub transient: TransientCampaign,
    pub science: ScienceCampaign,
    pub moga: MogaSection,
    /// Training share of the exported dataset.
    pub split_ratio: f64,
    /// Campaign size under `--budget-smoke`.
    pub smoke_scenarios: usize,
    /// Annealing iterations per scenario under `--budget-smoke`.
    pub smoke_iterations: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            mode: TuneMode::Transient,
            transient: TransientCampaign::default(),
            science: ScienceCampaign::default(),
            moga: MogaSection::default(),
            split_ratio: 0.8,
            smoke_scenarios: 10,
            smoke_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    /// Weight initialization seed; the run seed is used when unset.
    pub init_seed: Option<u64>,
    pub optimizer: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN.to_vec(),
            init_seed: None,
            optimizer: TrainConfig { epochs: 2000, weight_decay: 0.2, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuvSection {
    pub scenario: AuvScenario,
    /// Also run the sign-function variant on the same seed.
    pub compare_sign: bool,
}

impl Default for AuvSection {
    fn default() -> Self {
        Self { scenario: AuvScenario::default(), compare_sign: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub global: GlobalConfig,
    pub simulate: SimulateConfig,
    pub tune: TuneConfig,
    pub train: TrainSection,
    pub mission: MissionRun,
    pub auv: AuvSection,
}

impl CliConfig {
    /// Parses TOML text; errors carry the line, column and offending key.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(format!("{}: {e}", origin.display())))?;
        cfg.check().map_err(|e| ConfigError(format!("{}: {e}", origin.display())))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: cannot read: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Cross-field checks that serde cannot express.
    pub fn check(&self) -> Result<(), String> {
        if log_filter(&self.global.log_level).is_none() {
            return Err(format!(
                "global.log_level: `{}` is not one of off, error, warn, info, debug, trace",
                self.global.log_level
            ));
        }
        if let Some(ts) = self.global.time_scale {
            if !(ts > 0.0 && ts.is_finite()) {
                return Err(format!("global.time_scale: must be > 0, got {ts}"));
            }
        }
        if !(self.tune.split_ratio > 0.0 && self.tune.split_ratio < 1.0) {
            return Err(format!("tune.split_ratio: must lie in (0, 1), got {}", self.tune.split_ratio));
        }
        if self.tune.smoke_scenarios < 2 || self.tune.smoke_iterations == 0 {
            return Err("tune.smoke_scenarios must be ≥ 2 and tune.smoke_iterations ≥ 1".into());
        }
        if self.train.hidden.is_empty() || self.train.hidden.contains(&0) {
            return Err("train.hidden: needs at least one non-empty hidden layer".into());
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn resolve(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.global.seed = s;
        }
        if let Some(ts) = self.global.time_scale {
            self.mission.catalog.time_scale = ts;
        }
        self
    }
}

pub fn log_filter(level: &str) -> Option<log::LevelFilter> {
    level.parse().ok()
}
