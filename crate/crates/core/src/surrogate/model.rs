use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{check_widths, normalized_pairs, train_network, Mlp, TrainConfig};
use crate::error::{Error, Result};
use crate::tuner::{Dataset, DatasetRow, Normalization, FEATURE_DIM, TARGET_DIM};

/// Default hidden layer widths.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Largest per-feature |z| still treated as inside the training distribution.
pub const IN_DISTRIBUTION_Z: f64 = 3.0;

/// Admissible range of a named output. Costs are only floored at zero; gains
/// and the transient duration are clamped into the tuning box.
pub fn output_range(name: &str) -> (f64, f64) {
    match name {
        "k1" | "k2" | "k_smc" | "z" | "eps" | "p" | "d" => (0.01, 3.0),
        "T" => (7.2, 72.0),
        _ => (0.0, f64::INFINITY),
    }
}

/// MLP bound to the normalization statistics and target names of the
/// dataset it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateModel {
    pub network: Mlp,
    pub features: Normalization,
    pub targets: Normalization,
    pub target_names: Vec<String>,
    pub trained: bool,
    pub seed: u64,
}

/// Why the emitted plan looks the way it does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub predicted_energy: f64,
    pub predicted_error_deg: f64,
    /// One `"<name>: clamped at <bound>"` entry per active clamp.
    pub clamps: Vec<String>,
    /// Per-feature z-scores against the training statistics.
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
    pub in_distribution: bool,
}

/// Supervisor-consumable output of one surrogate query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePlan {
    pub target_names: Vec<String>,
    /// Emitted `[E, e°, …]` after activation and clamping.
    pub values: [f64; TARGET_DIM],
    /// Denormalized network output before activation and clamping.
    pub raw: [f64; TARGET_DIM],
    pub gains: Vec<f64>,
    /// Transient duration, s, when the model predicts one.
    pub duration: Option<f64>,
    pub explanation: Explanation,
}

impl SurrogatePlan {
    pub fn energy(&self) -> f64 {
        self.values[0]
    }

    pub fn error_deg(&self) -> f64 {
        self.values[1]
    }
}

impl SurrogateModel {
    /// Untrained network with the dataset's statistics and target names.
    pub fn new(ds: &Dataset, hidden: &[usize], seed: u64) -> Result<Self> {
        check_widths(ds)?;
        Ok(Self {
            network: Mlp::new(&sizes(hidden), seed)?,
            features: ds.features.clone(),
            targets: ds.targets.clone(),
            target_names: ds.target_names.clone(),
            trained: false,
            seed,
        })
    }

    /// Zero-weight network on identity statistics; every raw output is 0.
    pub fn zeroed(target_names: &[&str], hidden: &[usize]) -> Result<Self> {
        Ok(Self {
            network: Mlp::zeroed(&sizes(hidden))?,
            features: Normalization::identity(FEATURE_DIM),
            targets: Normalization::identity(TARGET_DIM),
            target_names: target_names.iter().map(|s| s.to_string()).collect(),
            trained: true,
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = self.network.sizes();
        if self.network.input_dim() != FEATURE_DIM || self.network.output_dim() != TARGET_DIM {
            return Err(Error::Surrogate(format!(
                "layer sizes {sizes:?} must start at {FEATURE_DIM} and end at {TARGET_DIM}"
            )));
        }
        for (i, l) in self.network.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::Surrogate(format!("layer {i} has inconsistent parameter counts")));
            }
            if i > 0 && l.inputs != self.network.layers[i - 1].outputs {
                return Err(Error::Surrogate(format!("layer {i} input width does not chain")));
            }
        }
        if self.network.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::Surrogate("non-finite network parameter".into()));
        }
        self.features.validate(FEATURE_DIM)?;
        self.targets.validate(TARGET_DIM)?;
        if self.target_names.len() != TARGET_DIM {
            return Err(Error::Surrogate(format!("expected {TARGET_DIM} target names")));
        }
        Ok(())
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != FEATURE_DIM {
            return Err(Error::Surrogate(format!("expected {FEATURE_DIM} features, got {}", features.len())));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Surrogate(format!("feature {i} is not finite")));
        }
        Ok(())
    }

    /// Network output in normalized target units, before any activation.
    pub fn normalized_output(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_features(features)?;
        Ok(self.network.forward(&self.features.normalize(features)))
    }

    /// Physical outputs after the nonnegative activation and box clamps, with
    /// the raw denormalized values and the clamps that fired.
    fn emit(&self, features: &[f64]) -> Result<([f64; TARGET_DIM], [f64; TARGET_DIM], Vec<String>)> {
        let raw = self.targets.denormalize(&self.normalized_output(features)?);
        let mut values = [0.0; TARGET_DIM];
        let mut clamps = Vec::new();
        for (i, name) in self.target_names.iter().enumerate() {
            let (lo, hi) = output_range(name);
            let v = raw[i].max(0.0);
            values[i] = v.clamp(lo, hi);
            if raw[i] < lo {
                clamps.push(format!("{name}: clamped at {lo:?}"));
            } else if raw[i] > hi {
                clamps.push(format!("{name}: clamped at {hi:?}"));
            }
        }
        let raw: [f64; TARGET_DIM] = raw.try_into().expect("output width checked on construction");
        Ok((values, raw, clamps))
    }

    /// `[E, e°, …]` in physical units, inside the output box.
    pub fn forward(&self, features: &[f64]) -> Result<[f64; TARGET_DIM]> {
        Ok(self.emit(features)?.0)
    }

    /// Gains, duration and expected cost with an explanation record.
    pub fn predict_plan(&self, features: &[f64]) -> Result<SurrogatePlan> {
        if !self.trained {
            return Err(Error::Surrogate("model has not been trained".into()));
        }
        let (values, raw, clamps) = self.emit(features)?;
        let z_scores = self.features.normalize(features);
        let max_abs_z = z_scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        let has_duration = self.target_names[TARGET_DIM - 1] == "T";
        let gains_end = if has_duration { TARGET_DIM - 1 } else { TARGET_DIM };
        Ok(SurrogatePlan {
            target_names: self.target_names.clone(),
            values,
            raw,
            gains: values[2..gains_end].to_vec(),
            duration: has_duration.then_some(values[TARGET_DIM - 1]),
            explanation: Explanation {
                predicted_energy: values[0],
                predicted_error_deg: values[1],
                clamps,
                z_scores,
                max_abs_z,
                in_distribution: max_abs_z <= IN_DISTRIBUTION_Z,
            },
        })
    }

    /// Trains on the dataset's training split; returns the loss history.
    pub fn train(&mut self, ds: &Dataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
        check_widths(ds)?;
        if ds.features != self.features || ds.targets != self.targets {
            return Err(Error::Surrogate("dataset statistics differ from the model's".into()));
        }
        let (xs, ys) = normalized_pairs(&ds.train, &self.features, &self.targets);
        let history = train_network(&mut self.network, &xs, &ys, cfg)?;
        self.trained = true;
        self.seed = cfg.seed;
        Ok(history)
    }

    /// Mean squared error over normalized targets of `rows`.
    pub fn evaluate_mse(&self, rows: &[DatasetRow]) -> Result<f64> {
        if rows.is_empty() {
            return Err(Error::Empty("evaluation split"));
        }
        let (xs, ys) = normalized_pairs(rows, &self.features, &self.targets);
        let x: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let y: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
        Ok(self.network.loss(&x, &y))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }
}

fn sizes(hidden: &[usize]) -> Vec<usize> {
    std::iter::once(FEATURE_DIM).chain(hidden.iter().copied()).chain(std::iter::once(TARGET_DIM)).collect()
}
