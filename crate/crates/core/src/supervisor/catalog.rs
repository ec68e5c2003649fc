use serde::{Deserialize, Deserializer, Serialize};

use super::guard::parse_duration;
use crate::error::{Error, Result};

/// One operational mode: commissioning, an observation target, or
/// decommissioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub id: u32,
    pub name: String,
    /// Mission duration in seconds; config files may also give a string
    /// with a unit such as `"60 days"` or `"0.2 hr"`.
    #[serde(rename = "duration", deserialize_with = "seconds_or_text")]
    pub duration_s: f64,
}

fn seconds_or_text<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Seconds(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Seconds(s) => Ok(s),
        Raw::Text(t) => parse_duration(&t).map_err(serde::de::Error::custom),
    }
}

/// Ordered mission modes. The first entry is commissioning, the last is
/// decommissioning and everything in between is observed in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionCatalog {
    pub entries: Vec<CatalogEntry>,
    /// Simulation seconds per mission second.
    #[serde(default = "super::automaton::default_time_scale")]
    pub time_scale: f64,
}

impl MissionCatalog {
    /// Commissioning, eight X-ray targets, decommissioning.
    pub fn standard(time_scale: f64) -> Self {
        const HOUR: f64 = 3600.0;
        const DAY: f64 = 86_400.0;
        let rows: [(&str, f64); 10] = [
            ("Commissioning", 60.0 * DAY),
            ("Sco X-1", 0.2 * HOUR),
            ("GX 5-1", 1.5 * HOUR),
            ("GRS 1915+105", 4.2 * HOUR),
            ("Cyg X-3", 4.9 * HOUR),
            ("Crab Pulsar", 5.4 * HOUR),
            ("Cen X-3", 19.0 * HOUR),
            ("gamma Cas", 146.0 * HOUR),
            ("Eta Carinae", 452.0 * HOUR),
            ("Decommissioning", 5.0 * DAY),
        ];
        Self {
            entries: rows
                .iter()
                .enumerate()
                .map(|(i, (name, d))| CatalogEntry { id: i as u32, name: name.to_string(), duration_s: *d })
                .collect(),
            time_scale,
        }
    }

    /// The standard catalog restricted to the given target ids.
    pub fn with_targets(time_scale: f64, ids: &[u32]) -> Self {
        let full = Self::standard(time_scale);
        let last = full.entries.len() - 1;
        let mut entries = vec![full.entries[0].clone()];
        entries.extend(full.entries[1..last].iter().filter(|e| ids.contains(&e.id)).cloned());
        entries.push(full.entries[last].clone());
        Self { entries, time_scale }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() < 3 {
            return Err(Error::Config("catalog needs commissioning, at least one target and decommissioning".into()));
        }
        if !(self.time_scale > 0.0) {
            return Err(Error::Config(format!("time_scale must be > 0, got {}", self.time_scale)));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if !(e.duration_s > 0.0) {
                return Err(Error::Config(format!("catalog entry `{}` needs a positive duration", e.name)));
            }
            if self.entries[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::Config(format!("duplicate catalog id {}", e.id)));
            }
        }
        Ok(())
    }

    pub fn commissioning(&self) -> &CatalogEntry {
        &self.entries[0]
    }

    pub fn decommissioning(&self) -> &CatalogEntry {
        &self.entries[self.entries.len() - 1]
    }

    pub fn targets(&self) -> &[CatalogEntry] {
        &self.entries[1..self.entries.len() - 1]
    }

    /// Duration in simulation seconds.
    pub fn scaled(&self, e: &CatalogEntry) -> f64 {
        e.duration_s * self.time_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_catalog_is_valid() {
        let c = MissionCatalog::standard(1e-5);
        c.validate().unwrap();
        assert_eq!(c.targets().len(), 8);
        assert!((c.scaled(c.commissioning()) - 51.84).abs() < 1e-9);
    }

    #[test]
    fn durations_parse_from_text() {
        let text = r#"
            time_scale = 1e-3
            [[entries]]
            id = 0
            name = "Commissioning"
            duration = "60 days"
            [[entries]]
            id = 1
            name = "Sco X-1"
            duration = "0.2 hr"
            [[entries]]
            id = 9
            name = "Decommissioning"
            duration = 432000.0
        "#;
        let c: MissionCatalog = toml::from_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.targets()[0].duration_s, 720.0);
        assert_eq!(c.commissioning().duration_s, 60.0 * 86_400.0);
    }

    #[test]
    fn rejects_duplicate_ids_and_short_catalogs() {
        let mut c = MissionCatalog::standard(1.0);
        c.entries[2].id = 1;
        assert!(c.validate().is_err());
        let short = MissionCatalog { entries: MissionCatalog::standard(1.0).entries[..2].to_vec(), time_scale: 1.0 };
        assert!(short.validate().is_err());
    }
}
