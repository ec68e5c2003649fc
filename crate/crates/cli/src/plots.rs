//! Plot-ready CSV bundle rebuilt from the files of a run directory.
//!
//! Series figures are tidy long tables `time,series,value` with the time
//! taken at the end of each step. The Pareto table is wide.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use supctl_core::scenarios::RunReport;

use crate::manifest::relative;

pub const PLOT_DIR: &str = "plots";
/// Source of the Pareto table, written by `tune`.
pub const PARETO_FILE: &str = "pareto_points.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub energy: f64,
    pub error_deg: f64,
    pub gains: Vec<f64>,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoints {
    pub gain_names: Vec<String>,
    pub points: Vec<ParetoPoint>,
}

/// Files written and inputs that were expected but absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotBundle {
    pub written: Vec<String>,
    pub missing: Vec<String>,
}

struct Figure {
    file: &'static str,
    command: &'static str,
    /// `(report name, label)` pairs.
    reports: &'static [(&'static str, &'static str)],
    columns: &'static [&'static str],
}

const FIGURES: &[Figure] = &[
    Figure {
        file: "science_attitude.csv",
        command: "simulate-science",
        reports: &[("science_smc", "smc"), ("science_pd", "pd")],
        columns: &["error", "u_x", "u_y", "u_z"],
    },
    Figure {
        file: "relative_position.csv",
        command: "simulate-relpos",
        reports: &[("relpos_smc", "smc"), ("relpos_pd", "pd")],
        columns: &["r_x", "r_y", "r_z", "error"],
    },
    Figure {
        file: "auv_translational.csv",
        command: "auv",
        reports: &[("auv_leader", "leader"), ("auv_follower", "follower")],
        columns: &["r_x", "r_y", "r_z", "ref_x", "ref_y", "ref_z"],
    },
    Figure {
        file: "auv_rotational.csv",
        command: "auv",
        reports: &[("auv_leader", "leader"), ("auv_follower", "follower")],
        columns: &["q_x", "q_y", "q_z", "q_w", "tau_x", "tau_y", "tau_z"],
    },
    Figure {
        file: "auv_chatter.csv",
        command: "auv",
        reports: &[("auv_follower", "boundary_layer"), ("auv_sign_follower", "sign")],
        columns: &["error", "u_x", "u_y", "u_z"],
    },
];

fn long_table(rows: &mut String, label: &str, report: &RunReport, columns: &[&str], missing: &mut Vec<String>) {
    let s = &report.series;
    let (Some(t), Some(h)) = (s.index("t"), s.index("h")) else {
        missing.push(format!("{}: time columns", report.name));
        return;
    };
    for c in columns {
        let Some(j) = s.index(c) else {
            missing.push(format!("{}: column {c}", report.name));
            continue;
        };
        for r in &s.rows {
            let _ = writeln!(rows, "{},{label}.{c},{}", r[t] + r[h], r[j]);
        }
    }
}

fn write(dir: &Path, file: &str, text: &str, bundle: &mut PlotBundle) -> Result<()> {
    let out = dir.join(PLOT_DIR);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(file);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    bundle.written.push(relative(dir, &path));
    Ok(())
}

fn load(dir: &Path, name: &str) -> Option<Result<RunReport>> {
    let p = RunReport::report_path(dir, name);
    p.exists().then(|| RunReport::load(&p).with_context(|| format!("loading {}", p.display())))
}

/// Rebuilds `plots/` from the reports in `dir`. A figure is emitted when
/// any of its inputs exists or the run's `command` calls for it; absent
/// inputs are listed and the rest of the bundle is still written.
/// Re-emission overwrites with identical bytes.
pub fn emit_plot_data(dir: &Path, command: Option<&str>) -> Result<PlotBundle> {
    let mut bundle = PlotBundle::default();
    for fig in FIGURES {
        let present: Vec<_> = fig.reports.iter().filter_map(|(n, l)| load(dir, n).map(|r| (*n, *l, r))).collect();
        let wanted = command == Some(fig.command);
        if present.is_empty() && !wanted {
            continue;
        }
        for (n, _) in fig.reports {
            if !present.iter().any(|(p, _, _)| p == n) {
                bundle.missing.push(format!("{}: report {n}", fig.file));
            }
        }
        if present.is_empty() {
            continue;
        }
        let mut text = String::from("time,series,value\n");
        for (_, label, report) in present {
            long_table(&mut text, label, &report?, fig.columns, &mut bundle.missing);
        }
        write(dir, fig.file, &text, &mut bundle)?;
    }

    let mission = mission_reports(dir)?;
    if !mission.is_empty() {
        let mut text = String::from("time,series,value\n");
        for r in &mission {
            long_table(&mut text, &r.name, r, &["error"], &mut bundle.missing);
        }
        write(dir, "mission_error.csv", &text, &mut bundle)?;
    } else if command == Some("mission") {
        bundle.missing.push("mission_error.csv: mission phase reports".into());
    }

    let pareto = dir.join(PARETO_FILE);
    if pareto.exists() {
        let text = std::fs::read_to_string(&pareto).with_context(|| format!("reading {}", pareto.display()))?;
        let points: ParetoPoints =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", pareto.display()))?;
        write(dir, "pareto.csv", &pareto_csv(&points), &mut bundle)?;
    } else if command == Some("tune") {
        bundle.missing.push(format!("pareto.csv: {PARETO_FILE}"));
    }
    for m in &bundle.missing {
        log::warn!("plot data incomplete: {m}");
    }
    Ok(bundle)
}

fn mission_reports(dir: &Path) -> Result<Vec<RunReport>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().map(str::to_owned))
        .filter_map(|f| f.strip_suffix("_report.json").map(str::to_owned))
        .filter(|n| n.starts_with("mission_"))
        .collect();
    names.sort();
    names.iter().filter_map(|n| load(dir, n)).collect()
}

/// `E,e_deg,<gain names…>,dominated`.
pub fn pareto_csv(p: &ParetoPoints) -> String {
    let mut text = String::from("E,e_deg");
    for g in &p.gain_names {
        text.push(',');
        text.push_str(g);
    }
    text.push_str(",dominated\n");
    for pt in &p.points {
        let _ = write!(text, "{},{}", pt.energy, pt.error_deg);
        for g in &pt.gains {
            let _ = write!(text, ",{g}");
        }
        let _ = writeln!(text, ",{}", pt.dominated);
    }
    text
}

/// Flags every point dominated by another in `(E, e)`.
pub fn mark_dominated(points: &mut [ParetoPoint]) {
    let objs: Vec<[f64; 2]> = points.iter().map(|p| [p.energy, p.error_deg]).collect();
    for (i, p) in points.iter_mut().enumerate() {
        p.dominated = objs.iter().any(|o| supctl_core::tuner::dominates(o, &objs[i]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(e: f64, err: f64) -> ParetoPoint {
        ParetoPoint { energy: e, error_deg: err, gains: vec![1.0, 2.0], dominated: false }
    }

    #[test]
    fn dominated_points_are_flagged() {
        let mut pts = vec![point(1.0, 1.0), point(2.0, 2.0), point(0.5, 3.0), point(1.0, 1.0)];
        mark_dominated(&mut pts);
        let flags: Vec<bool> = pts.iter().map(|p| p.dominated).collect();
        assert_eq!(flags, [false, true, false, false]);
    }

    #[test]
    fn pareto_csv_has_objectives_gains_and_flag() {
        let p = ParetoPoints { gain_names: vec!["k1".into(), "k2".into()], points: vec![point(0.25, 0.5)] };
        assert_eq!(pareto_csv(&p), "E,e_deg,k1,k2,dominated\n0.25,0.5,1,2,false\n");
    }

    #[test]
    fn empty_directory_lists_what_the_command_needed() {
        let dir = tempfile::tempdir().unwrap();
        let b = emit_plot_data(dir.path(), Some("auv")).unwrap();
        assert!(b.written.is_empty());
        assert!(b.missing.iter().any(|m| m.contains("auv_leader")));
    }
}
