use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{FEATURE_DIM, FEATURE_NAMES};
use crate::error::{Error, Result};

/// Number of surrogate targets: `E`, `e`, two gains and a fifth plan value.
pub const TARGET_DIM: usize = 5;

/// Target columns of transient-phase data: Lyapunov gains and duration.
pub const TRANSIENT_TARGETS: [&str; TARGET_DIM] = ["E", "e_deg", "k1", "k2", "T"];

/// Target columns of science-phase sliding-mode data.
pub const SCIENCE_SMC_TARGETS: [&str; TARGET_DIM] = ["E", "e_deg", "k_smc", "z", "eps"];

pub const TRAIN_FILE: &str = "train.csv";
pub const HELDOUT_FILE: &str = "heldout.csv";
pub const NORMALIZATION_FILE: &str = "normalization.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub features: [f64; FEATURE_DIM],
    pub targets: [f64; TARGET_DIM],
}

impl DatasetRow {
    pub fn is_finite(&self) -> bool {
        self.features.iter().chain(&self.targets).all(|v| v.is_finite())
    }
}

/// Per-column affine map `z = (x − mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    /// Population statistics per column; constant columns get unit scale.
    pub fn fit<'a>(columns: usize, rows: impl Iterator<Item = &'a [f64]> + Clone) -> Self {
        let n = rows.clone().count().max(1) as f64;
        let mut mean = vec![0.0; columns];
        for r in rows.clone() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; columns];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| v * s + m).collect()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.mean.len() != dim || self.std.len() != dim {
            return Err(Error::Config(format!("normalization needs {dim} columns")));
        }
        if !self.mean.iter().all(|m| m.is_finite()) || !self.std.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::Config("normalization statistics must be finite with std > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationFile {
    pub target_names: Vec<String>,
    pub features: Normalization,
    pub targets: Normalization,
    pub seed: u64,
    pub split_ratio: f64,
}

/// Surrogate training data with a disjoint held-out split. Normalization
/// statistics come from the training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub target_names: Vec<String>,
    pub train: Vec<DatasetRow>,
    pub heldout: Vec<DatasetRow>,
    pub features: Normalization,
    pub targets: Normalization,
    pub seed: u64,
    pub split_ratio: f64,
}

/// Deterministic shuffled split; `ratio` of the rows (rounded, at least
/// one each side) go to training.
pub fn split_dataset(rows: &[DatasetRow], target_names: &[&str], ratio: f64, seed: u64) -> Result<Dataset> {
    if rows.len() < 2 {
        return Err(Error::Parameter(format!("dataset needs at least 2 rows, got {}", rows.len())));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Parameter(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    if target_names.len() != TARGET_DIM {
        return Err(Error::Parameter(format!("need {TARGET_DIM} target names")));
    }
    if let Some(i) = rows.iter().position(|r| !r.is_finite()) {
        return Err(Error::Parameter(format!("dataset row {i} has non-finite entries")));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratio * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
    let train: Vec<DatasetRow> = order[..n_train].iter().map(|&i| rows[i]).collect();
    let heldout: Vec<DatasetRow> = order[n_train..].iter().map(|&i| rows[i]).collect();
    let features = Normalization::fit(FEATURE_DIM, train.iter().map(|r| &r.features[..]));
    let targets = Normalization::fit(TARGET_DIM, train.iter().map(|r| &r.targets[..]));
    Ok(Dataset {
        target_names: target_names.iter().map(|s| s.to_string()).collect(),
        train,
        heldout,
        features,
        targets,
        seed,
        split_ratio: ratio,
    })
}

fn header(target_names: &[String]) -> String {
    FEATURE_NAMES.iter().copied().chain(target_names.iter().map(String::as_str)).collect::<Vec<_>>().join(",")
}

fn rows_csv(rows: &[DatasetRow], target_names: &[String]) -> String {
    let mut out = header(target_names);
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.features.iter().chain(&r.targets).map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

impl Dataset {
    /// Writes `train.csv`, `heldout.csv` (raw values with a header row) and
    /// `normalization.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        write(TRAIN_FILE, rows_csv(&self.train, &self.target_names))?;
        write(HELDOUT_FILE, rows_csv(&self.heldout, &self.target_names))?;
        let norm = NormalizationFile {
            target_names: self.target_names.clone(),
            features: self.features.clone(),
            targets: self.targets.clone(),
            seed: self.seed,
            split_ratio: self.split_ratio,
        };
        write(NORMALIZATION_FILE, serde_json::to_string_pretty(&norm)? + "\n")
    }

    /// Reads a directory written by [`Dataset::write`].
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
        };
        let norm: NormalizationFile = serde_json::from_str(&read(NORMALIZATION_FILE)?)?;
        norm.features.validate(FEATURE_DIM)?;
        norm.targets.validate(TARGET_DIM)?;
        let train = parse_rows(&read(TRAIN_FILE)?, &norm.target_names, TRAIN_FILE)?;
        let heldout = parse_rows(&read(HELDOUT_FILE)?, &norm.target_names, HELDOUT_FILE)?;
        Ok(Self {
            target_names: norm.target_names,
            train,
            heldout,
            features: norm.features,
            targets: norm.targets,
            seed: norm.seed,
            split_ratio: norm.split_ratio,
        })
    }
}

fn parse_rows(text: &str, target_names: &[String], file: &str) -> Result<Vec<DatasetRow>> {
    let mut lines = text.lines();
    let expected = header(target_names);
    match lines.next() {
        Some(h) if h == expected => {}
        other => {
            return Err(Error::Config(format!(
                "{file}: header mismatch, expected `{expected}`, got `{}`",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let vals: Vec<f64> = l
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("{file} line {}: {e}", i + 2)))?;
            if vals.len() != FEATURE_DIM + TARGET_DIM {
                return Err(Error::Config(format!(
                    "{file} line {}: expected {} columns, got {}",
                    i + 2,
                    FEATURE_DIM + TARGET_DIM,
                    vals.len()
                )));
            }
            let mut row = DatasetRow { features: [0.0; FEATURE_DIM], targets: [0.0; TARGET_DIM] };
            row.features.copy_from_slice(&vals[..FEATURE_DIM]);
            row.targets.copy_from_slice(&vals[FEATURE_DIM..]);
            Ok(row)
        })
        .collect()
}

/// Splits `rows` and writes the result to `dir`.
pub fn export_dataset(
    rows: &[DatasetRow],
    target_names: &[&str],
    ratio: f64,
    seed: u64,
    dir: &Path,
) -> Result<Dataset> {
    let ds = split_dataset(rows, target_names, ratio, seed)?;
    ds.write(dir)?;
    Ok(ds)
}
