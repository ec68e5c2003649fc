use serde::{Deserialize, Serialize};

use super::report::{RunReport, Series};
use crate::controllers::{lyapunov_value, smc_attitude_surface, PdGains, SmcAttitudeGains};
use crate::dynamics::BodyState;
use crate::error::Result;
use crate::mathcore::{principal_angle, quat_error, Quaternion, Vec3};
use crate::tuner::{scalarize, simulate_attitude, AttitudeLaw, AttitudeStep, CostVector, Evaluation, PlantConfig};

/// Sliding-mode operating point `[k_smc, Z, ε]` of the science phase.
pub const REFERENCE_SMC_GAINS: [f64; 3] = [2.9947, 0.0193, 0.2601];

/// PD operating point `[P, D]` of the science phase.
pub const REFERENCE_PD_GAINS: [f64; 2] = [0.1208, 0.3786];

/// Short controller label used in report names and files.
pub fn law_label(law: &AttitudeLaw) -> &'static str {
    match law {
        AttitudeLaw::Lyapunov(_) => "lyapunov",
        AttitudeLaw::Smc(_) => "smc",
        AttitudeLaw::Pd(_) => "pd",
        AttitudeLaw::Open { .. } => "open",
    }
}

/// Runs one attitude scenario and records its per-step series.
///
/// The `error` column is the principal angle of the true attitude error at
/// the end of each step, in degrees. Extra columns hold the end-of-step
/// attitude and rate, plus the sliding variable (sliding mode) or the
/// Lyapunov value (Lyapunov law) evaluated on the measurement.
pub fn attitude_run(
    name: &str,
    x0: &BodyState,
    xf: &BodyState,
    law: &AttitudeLaw,
    duration: f64,
    plant: &PlantConfig,
    seed: u64,
) -> Result<(RunReport, Evaluation)> {
    let mut steps: Vec<AttitudeStep> = Vec::new();
    let mut record = |s: &AttitudeStep| steps.push(*s);
    let ev = simulate_attitude(x0, xf, law, duration, plant, seed, Some(&mut record))?;
    steps.truncate(ev.steps);

    let mut extra = vec!["q_x", "q_y", "q_z", "q_w", "w_x", "w_y", "w_z"];
    match law {
        AttitudeLaw::Smc(_) => extra.extend(["s_x", "s_y", "s_z"]),
        AttitudeLaw::Lyapunov(_) => extra.push("V"),
        _ => {}
    }
    let mut series = Series::new(&extra);
    for (k, st) in steps.iter().enumerate() {
        let end = steps.get(k + 1).map(|n| n.state).unwrap_or(ev.terminal);
        let tau = st.torque;
        let mut row = vec![
            st.t,
            st.h,
            tau.dot(&st.state.omega).abs(),
            tau.dot(&end.omega).abs(),
            principal_angle(quat_error(end.q, xf.q)).to_degrees(),
            tau.x,
            tau.y,
            tau.z,
        ];
        row.extend(end.q.to_array());
        row.extend(end.omega.iter());
        match law {
            AttitudeLaw::Smc(g) => {
                row.extend(smc_attitude_surface(&st.dq, &st.measured.omega, &xf.omega, g.k_smc).iter())
            }
            AttitudeLaw::Lyapunov(g) => row.push(lyapunov_value(&st.dq, &st.measured.omega, &plant.body.j_nominal, g)),
            _ => {}
        }
        series.push(row);
    }
    let report = RunReport::new(name, law_label(law), seed, "deg", series, ev.diverged)?;
    Ok((report, ev))
}

/// Fixed science-pointing scenario: a small residual pointing error about a
/// skewed axis, held against a constant torque bias and sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScienceScenario {
    /// Axis of the initial attitude error (need not be unit length).
    pub axis: Vec3,
    /// Initial attitude error, degrees.
    pub angle_deg: f64,
    /// Initial body rate, rad/s.
    pub omega0: Vec3,
    /// Observation window, s.
    pub duration: f64,
    pub plant: PlantConfig,
}

impl Default for ScienceScenario {
    fn default() -> Self {
        Self {
            axis: Vec3::new(1.0, -2.0, 0.5),
            angle_deg: 10.0,
            omega0: Vec3::zeros(),
            duration: 120.0,
            plant: PlantConfig::science(),
        }
    }
}

impl ScienceScenario {
    pub fn x0(&self) -> BodyState {
        BodyState::attitude(Quaternion::from_axis_angle(self.axis, self.angle_deg.to_radians()), self.omega0)
    }

    /// The science target is the reference frame, held at rest.
    pub fn xf(&self) -> BodyState {
        BodyState::default()
    }
}

/// Sliding-mode and PD runs on the same scenario and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScienceComparison {
    pub smc: RunReport,
    pub pd: RunReport,
    pub smc_cost: CostVector,
    pub pd_cost: CostVector,
    /// `w₁E + w₂e°` of each run (the window is fixed, so `w₃` is unused).
    pub smc_objective: f64,
    pub pd_objective: f64,
}

/// Runs the sliding-mode and PD laws on `scenario` with one seed.
pub fn run_science_attitude_comparison(
    scenario: &ScienceScenario,
    smc: &SmcAttitudeGains,
    pd: &PdGains,
    weights: &Vec3,
    seed: u64,
) -> Result<ScienceComparison> {
    let (x0, xf) = (scenario.x0(), scenario.xf());
    let w = Vec3::new(weights.x, weights.y, 0.0);
    let (smc_report, smc_ev) =
        attitude_run("science_smc", &x0, &xf, &AttitudeLaw::Smc(*smc), scenario.duration, &scenario.plant, seed)?;
    let (pd_report, pd_ev) =
        attitude_run("science_pd", &x0, &xf, &AttitudeLaw::Pd(*pd), scenario.duration, &scenario.plant, seed)?;
    Ok(ScienceComparison {
        smc_objective: scalarize(&smc_ev.cost, scenario.duration, &w),
        pd_objective: scalarize(&pd_ev.cost, scenario.duration, &w),
        smc: smc_report,
        pd: pd_report,
        smc_cost: smc_ev.cost,
        pd_cost: pd_ev.cost,
    })
}
