//! Run manifest: resolved config, its hash, seeds, inputs, outputs and the
//! summary metrics of every run report written.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use supctl_core::scenarios::{Metrics, RunReport};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the resolved config as compact JSON with sorted keys.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, String>,
    /// Files written into the run directory, relative and sorted.
    pub outputs: Vec<String>,
    /// Metrics of every run report, by report name.
    pub summary: BTreeMap<String, Metrics>,
    /// Command-specific results.
    pub results: serde_json::Value,
}

/// Hashes the canonical form: object keys sorted, shortest round-trip
/// floats.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(&serde_json::to_value(config)?)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    pub fn new<T: Serialize>(command: &str, config: &T) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash(&config)?,
            config,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            summary: BTreeMap::new(),
            results: serde_json::Value::Null,
        })
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.into(), value);
    }

    pub fn output(&mut self, file: impl Into<String>) {
        self.outputs.push(file.into());
    }

    /// Writes the report into `dir` and records its files and metrics.
    pub fn report(&mut self, dir: &Path, report: &RunReport) -> Result<()> {
        report.write(dir).with_context(|| format!("writing report {}", report.name))?;
        for p in [RunReport::series_path(dir, &report.name), RunReport::report_path(dir, &report.name)] {
            self.output(relative(dir, &p));
        }
        self.summary.insert(report.name.clone(), report.metrics);
        Ok(())
    }

    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.outputs.sort();
        self.outputs.dedup();
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_the_config_content() {
        let a = config_hash(&serde_json::json!({"seed": 1})).unwrap();
        let b = config_hash(&serde_json::json!({"seed": 2})).unwrap();
        assert_eq!(a.len(), 64);
        assert_ne!(a, b);
        assert_eq!(a, config_hash(&serde_json::json!({"seed": 1})).unwrap());
    }

    #[test]
    fn sha256_matches_a_known_digest() {
        // SHA-256 of the two bytes `{}`.
        let h = config_hash(&serde_json::json!({})).unwrap();
        assert_eq!(h, "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");
    }
}
