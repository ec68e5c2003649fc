use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns every series carries, in this order: step start time, step
/// length, `|uᵀv|` at the step start and end, tracking error at the step end
/// and the three control channels held over the step.
pub const REQUIRED_COLUMNS: [&str; 8] = ["t", "h", "p_start", "p_end", "error", "u_x", "u_y", "u_z"];

/// Fraction of the run, counted from the end, that the steady-state error
/// averages over.
pub const STEADY_STATE_WINDOW: f64 = 0.1;

/// Settling band as a fraction of the peak error.
pub const SETTLING_FRACTION: f64 = 0.02;

/// Per-step time series: one row per control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    /// Empty series with [`REQUIRED_COLUMNS`] followed by `extra`.
    pub fn new(extra: &[&str]) -> Self {
        Self { columns: REQUIRED_COLUMNS.iter().chain(extra).map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name).ok_or_else(|| Error::Config(format!("series has no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in REQUIRED_COLUMNS.iter().enumerate() {
            if self.columns.get(i).map(String::as_str) != Some(*c) {
                return Err(Error::Config(format!("series column {i} must be `{c}`")));
            }
        }
        if let Some(k) = self.rows.iter().position(|r| r.len() != self.columns.len()) {
            return Err(Error::Config(format!(
                "series row {k} has {} values, expected {}",
                self.rows[k].len(),
                self.columns.len()
            )));
        }
        Ok(())
    }

    /// Header plus one line per row. Values use the shortest round-trip
    /// representation, so reading the file back is exact.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            for (i, v) in r.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Empty("series file"))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let rows = lines
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                l.split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Config(format!("series line {}: {e}", i + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        let s = Self { columns, rows };
        s.validate()?;
        Ok(s)
    }
}

/// Summary of one run, derived from its series alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `Σ ½ h (p_start + p_end)`.
    pub energy: f64,
    /// Error at the end of the last step.
    pub terminal_error: f64,
    /// Mean error over steps ending in the final [`STEADY_STATE_WINDOW`] of
    /// the run.
    pub steady_state_error: f64,
    /// End of the first step after which the error stays within
    /// [`SETTLING_FRACTION`] of its peak; `None` if it never settles.
    pub settling_time: Option<f64>,
    /// Sign changes of the control between consecutive steps, per second and
    /// per channel.
    pub sign_flip_rate: f64,
    /// Largest absolute control component.
    pub peak_control: f64,
    pub samples: usize,
    /// Simulated span, s.
    pub duration: f64,
}

fn strict_sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

impl Metrics {
    pub fn from_series(s: &Series) -> Result<Self> {
        s.validate()?;
        let first = s.rows.first().ok_or(Error::Empty("series"))?;
        let last = s.rows.last().ok_or(Error::Empty("series"))?;
        let (t0, t_end) = (first[0], last[0] + last[1]);
        let duration = t_end - t0;

        let energy = s.rows.iter().map(|r| 0.5 * r[1] * (r[2] + r[3])).sum();

        let window_start = t_end - STEADY_STATE_WINDOW * duration;
        let tail: Vec<f64> = s.rows.iter().filter(|r| r[0] + r[1] >= window_start).map(|r| r[4]).collect();
        let steady_state_error = tail.iter().sum::<f64>() / tail.len() as f64;

        let peak = s.rows.iter().map(|r| r[4]).fold(0.0, f64::max);
        let band = SETTLING_FRACTION * peak;
        let settling_time = match s.rows.iter().rposition(|r| r[4] > band) {
            None => Some(t0),
            Some(k) if k + 1 < s.rows.len() => Some(s.rows[k][0] + s.rows[k][1]),
            Some(_) => None,
        };

        let mut flips = 0usize;
        for pair in s.rows.windows(2) {
            for c in 5..8 {
                let (a, b) = (strict_sign(pair[0][c]), strict_sign(pair[1][c]));
                if a != 0 && b != 0 && a != b {
                    flips += 1;
                }
            }
        }
        let sign_flip_rate = if duration > 0.0 { flips as f64 / (3.0 * duration) } else { 0.0 };
        let peak_control = s.rows.iter().flat_map(|r| r[5..8].iter()).fold(0.0, |m: f64, v| m.max(v.abs()));

        Ok(Self {
            energy,
            terminal_error: last[4],
            steady_state_error,
            settling_time,
            sign_flip_rate,
            peak_control,
            samples: s.rows.len(),
            duration,
        })
    }

    /// Largest difference between two metric sets, relative to magnitude
    /// for values above one.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let d = |a: f64, b: f64| {
            if a == b {
                0.0
            } else {
                (a - b).abs() / a.abs().max(b.abs()).max(1.0)
            }
        };
        let settle = match (self.settling_time, other.settling_time) {
            (Some(a), Some(b)) => d(a, b),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        let count = if self.samples == other.samples { 0.0 } else { f64::INFINITY };
        [
            d(self.energy, other.energy),
            d(self.terminal_error, other.terminal_error),
            d(self.steady_state_error, other.steady_state_error),
            d(self.sign_flip_rate, other.sign_flip_rate),
            d(self.peak_control, other.peak_control),
            d(self.duration, other.duration),
            settle,
            count,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Series and summary of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub controller: String,
    pub seed: u64,
    /// Unit of the `error` column.
    pub error_unit: String,
    pub diverged: bool,
    pub metrics: Metrics,
    #[serde(skip)]
    pub series: Series,
}

impl Default for Series {
    fn default() -> Self {
        Self::new(&[])
    }
}

/// Metadata and metrics as written next to the series file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    name: String,
    controller: String,
    seed: u64,
    error_unit: String,
    diverged: bool,
    series_file: String,
    metrics: Metrics,
}

impl RunReport {
    pub fn new(
        name: impl Into<String>,
        controller: impl Into<String>,
        seed: u64,
        error_unit: impl Into<String>,
        series: Series,
        diverged: bool,
    ) -> Result<Self> {
        let metrics = Metrics::from_series(&series)?;
        Ok(Self {
            name: name.into(),
            controller: controller.into(),
            seed,
            error_unit: error_unit.into(),
            diverged,
            metrics,
            series,
        })
    }

    /// Recomputes the metrics from the stored series.
    pub fn recompute(&self) -> Result<Metrics> {
        Metrics::from_series(&self.series)
    }

    pub fn series_path(dir: &Path, name: &str) -> PathBuf {
        dir.join(format!("{name}_series.csv"))
    }

    pub fn report_path(dir: &Path, name: &str) -> PathBuf {
        dir.join(format!("{name}_report.json"))
    }

    /// Writes `<name>_series.csv` and `<name>_report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let series = Self::series_path(dir, &self.name);
        std::fs::write(&series, self.series.to_csv()).map_err(|e| Error::io(&series, e))?;
        let file = ReportFile {
            name: self.name.clone(),
            controller: self.controller.clone(),
            seed: self.seed,
            error_unit: self.error_unit.clone(),
            diverged: self.diverged,
            series_file: series.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            metrics: self.metrics,
        };
        let report = Self::report_path(dir, &self.name);
        std::fs::write(&report, serde_json::to_string_pretty(&file)? + "\n").map_err(|e| Error::io(&report, e))
    }

    /// Reads a report written by [`write`](Self::write). The stored metrics
    /// are returned as written; compare them with [`recompute`](Self::recompute).
    pub fn load(report_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(report_path).map_err(|e| Error::io(report_path, e))?;
        let file: ReportFile = serde_json::from_str(&text)?;
        let dir = report_path.parent().unwrap_or(Path::new("."));
        let series_path = dir.join(&file.series_file);
        let csv = std::fs::read_to_string(&series_path).map_err(|e| Error::io(&series_path, e))?;
        Ok(Self {
            name: file.name,
            controller: file.controller,
            seed: file.seed,
            error_unit: file.error_unit,
            diverged: file.diverged,
            metrics: file.metrics,
            series: Series::from_csv(&csv)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(errors: &[f64], u: &[f64]) -> Series {
        let mut s = Series::new(&[]);
        for (k, (&e, &ux)) in errors.iter().zip(u).enumerate() {
            s.push(vec![k as f64 * 0.5, 0.5, 1.0, 3.0, e, ux, 0.0, -ux]);
        }
        s
    }

    #[test]
    fn hand_computed_metrics() {
        let s = series(
            &[4.0, 2.0, 1.0, 0.05, 0.02, 0.04, 0.01, 0.03, 0.02, 0.02],
            &[1.0, -1.0, -1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        );
        let m = Metrics::from_series(&s).unwrap();
        // ten steps of 0.5 s, power 1 at the start and 3 at the end
        assert_eq!(m.energy, 10.0 * 0.5 * 0.5 * 4.0);
        assert_eq!(m.duration, 5.0);
        assert_eq!(m.terminal_error, 0.02);
        // rows 8 and 9 end inside the final 0.5 s
        assert_eq!(m.steady_state_error, 0.02);
        // band 0.08: the last row above it is row 2, ending at 1.5 s
        assert_eq!(m.settling_time, Some(1.5));
        // two channels flip at rows 1 and 3 (the zero at row 4 is skipped)
        assert_eq!(m.sign_flip_rate, 4.0 / 15.0);
        assert_eq!(m.peak_control, 1.0);
    }

    #[test]
    fn never_settling_run_has_no_settling_time() {
        let s = series(&[0.1, 0.5, 1.0], &[0.0; 3]);
        assert_eq!(Metrics::from_series(&s).unwrap().settling_time, None);
    }

    #[test]
    fn empty_or_malformed_series_is_rejected() {
        assert!(Metrics::from_series(&Series::new(&[])).is_err());
        let mut s = Series::new(&["x"]);
        s.rows.push(vec![0.0; 3]);
        assert!(s.validate().is_err());
        let bad = Series { columns: vec!["t".into()], rows: vec![] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = series(&[1.0, 0.3333333333333333, 1e-17], &[0.1, -2.5e-8, 3.0]);
        let r = RunReport::new("demo", "smc", 7, "deg", s, false).unwrap();
        r.write(dir.path()).unwrap();
        let back = RunReport::load(&RunReport::report_path(dir.path(), "demo")).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.recompute().unwrap(), r.metrics);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in proptest::collection::vec(-1e12..1e12f64, 8..64)) {
            let mut s = Series::new(&[]);
            for chunk in vals.chunks_exact(8) {
                s.push(chunk.to_vec());
            }
            prop_assert_eq!(Series::from_csv(&s.to_csv()).unwrap(), s);
        }

        #[test]
        fn energy_is_nonnegative_for_nonnegative_power(p in proptest::collection::vec(0.0..10.0f64, 2..40)) {
            let mut s = Series::new(&[]);
            for (k, w) in p.windows(2).enumerate() {
                s.push(vec![k as f64 * 0.1, 0.1, w[0], w[1], 0.0, 0.0, 0.0, 0.0]);
            }
            prop_assert!(Metrics::from_series(&s).unwrap().energy >= 0.0);
        }
    }
}
