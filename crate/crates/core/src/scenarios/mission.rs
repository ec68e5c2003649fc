use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::report::{RunReport, Series};
use super::science::{law_label, REFERENCE_SMC_GAINS};
use crate::controllers::{LyapunovGains, SmcAttitudeGains};
use crate::dynamics::{attitude_derivative, measure, BodyState, BODY_QUAT_OFFSET};
use crate::error::{Error, Result};
use crate::mathcore::{principal_angle, quat_error, rk4_step, IntegratorConfig, Quaternion, Vec3};
use crate::supervisor::{
    run_mission, CatalogEntry, ControllerRole, MissionCatalog, MissionConfig, MissionHooks, Phase, PhaseContext,
    SupervisorTrace, TimedAutomaton,
};
use crate::surrogate::SurrogateModel;
use crate::tuner::{leg_seed, AttitudeLaw, PlantConfig, ScenarioSample};

/// Supervised replay of a mission catalog with the attitude plant attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionRun {
    pub catalog: MissionCatalog,
    pub mission: MissionConfig,
    /// Plant and control period; supervisor steps shorter than `plant.dt`
    /// are accumulated into one control step.
    pub plant: PlantConfig,
    /// Cost weights `[w_E, w_e, w_T]` handed to the surrogates.
    pub weights: Vec3,
    /// Sliding-mode gains used when no science surrogate is given.
    pub science_gains: SmcAttitudeGains,
    /// Lyapunov gains of the stabilization phase.
    pub stabilization_gains: LyapunovGains,
    pub initial: BodyState,
}

impl Default for MissionRun {
    fn default() -> Self {
        Self {
            catalog: MissionCatalog::standard(1e-5),
            mission: MissionConfig::default(),
            plant: PlantConfig::default(),
            weights: Vec3::new(1.0, 10.0, 3e-3),
            science_gains: SmcAttitudeGains::from_triplet(REFERENCE_SMC_GAINS),
            stabilization_gains: LyapunovGains { k1: 0.5, k2: 0.5 },
            initial: BodyState::default(),
        }
    }
}

/// One controlled phase of the replay with the surrogate's forecast next
/// to what the plant actually did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub controller: ControllerRole,
    pub object: Option<String>,
    pub start: f64,
    pub gains: Vec<f64>,
    /// Forecast `[E, e°]`; `None` when the gains did not come from a model.
    pub predicted: Option<[f64; 2]>,
    /// Realized `[E, e°]` at the end of the phase.
    pub realized: [f64; 2],
    pub clamps: Vec<String>,
    pub in_distribution: Option<bool>,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub trace: SupervisorTrace,
    pub phases: Vec<PhaseRecord>,
}

/// Uniformly distributed target attitude of catalog entry `id`.
pub fn target_attitude(seed: u64, id: u32) -> Quaternion {
    let mut rng = ChaCha8Rng::seed_from_u64(leg_seed(seed, id as usize));
    loop {
        let a: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let q = Quaternion::from_array(a);
        if q.norm() > 1e-6 {
            return q.normalized();
        }
    }
}

struct Forecast {
    gains: Vec<f64>,
    predicted: Option<[f64; 2]>,
    clamps: Vec<String>,
    in_distribution: Option<bool>,
}

struct Recording {
    phase: Phase,
    controller: ControllerRole,
    object: Option<String>,
    start: f64,
    forecast: Forecast,
    series: Series,
    energy: f64,
}

struct MissionPlant<'a> {
    cfg: &'a MissionRun,
    transient: &'a SurrogateModel,
    science: Option<&'a SurrogateModel>,
    seed: u64,
    x: BodyState,
    target: BodyState,
    law: AttitudeLaw,
    rng: ChaCha8Rng,
    bias: Vec3,
    time: f64,
    pending: f64,
    next_transient: Option<Forecast>,
    recording: Option<Recording>,
    records: Vec<PhaseRecord>,
}

impl MissionPlant<'_> {
    fn scenario(&self) -> ScenarioSample {
        ScenarioSample { x0: self.x, xf: self.target, w: self.cfg.weights, seed: self.seed }
    }

    fn forecast(model: &SurrogateModel, scenario: &ScenarioSample) -> Result<(Forecast, Option<f64>)> {
        let plan = model.predict_plan(&scenario.features())?;
        let f = Forecast {
            gains: plan.gains.clone(),
            predicted: Some([plan.energy(), plan.error_deg()]),
            clamps: plan.explanation.clamps.clone(),
            in_distribution: Some(plan.explanation.in_distribution),
        };
        Ok((f, plan.duration))
    }

    /// Integrates the time accumulated since the last control step under
    /// the current law.
    fn flush(&mut self) -> Result<()> {
        let h = self.pending;
        if h <= 0.0 {
            return Ok(());
        }
        self.pending = 0.0;
        let plant = &self.cfg.plant;
        let t = self.time - h;
        let seen = measure(&self.x, &plant.disturbance, &mut self.rng);
        let dq = quat_error(seen.q, self.target.q);
        let torque = self.law.torque(&dq, &seen.omega, &self.target.omega, &plant.body.j_nominal);
        let disturbance = self.bias + plant.disturbance.sample_noise(&mut self.rng);
        let next = rk4_step(
            |_, v| attitude_derivative(&BodyState::unpack(v), &torque, &plant.body, &disturbance),
            &self.x.pack(),
            t,
            &IntegratorConfig::new(h)?,
            &[BODY_QUAT_OFFSET],
        )?;
        let next = BodyState::unpack(&next);
        if !next.is_finite() {
            return Err(Error::IntegrationFault { t });
        }
        if let Some(rec) = self.recording.as_mut() {
            let (p0, p1) = (torque.dot(&self.x.omega).abs(), torque.dot(&next.omega).abs());
            rec.energy += 0.5 * h * (p0 + p1);
            let mut row = vec![
                t,
                h,
                p0,
                p1,
                principal_angle(quat_error(next.q, self.target.q)).to_degrees(),
                torque.x,
                torque.y,
                torque.z,
            ];
            row.extend(next.q.to_array());
            row.extend(next.omega.iter());
            rec.series.push(row);
        }
        self.x = next;
        Ok(())
    }

    fn close_recording(&mut self) -> Result<()> {
        let Some(rec) = self.recording.take() else { return Ok(()) };
        if rec.series.rows.is_empty() {
            return Ok(());
        }
        let index = self.records.len();
        let name = format!("mission_{index:02}_{}", phase_label(rec.phase));
        let report = RunReport::new(name, law_label(&self.law), self.seed, "deg", rec.series, false)?;
        let realized = [report.metrics.energy, report.metrics.terminal_error];
        debug_assert_eq!(rec.energy, report.metrics.energy);
        self.records.push(PhaseRecord {
            phase: rec.phase,
            controller: rec.controller,
            object: rec.object,
            start: rec.start,
            gains: rec.forecast.gains,
            predicted: rec.forecast.predicted,
            realized,
            clamps: rec.forecast.clamps,
            in_distribution: rec.forecast.in_distribution,
            report,
        });
        Ok(())
    }
}

fn phase_label(p: Phase) -> &'static str {
    match p {
        Phase::Transient => "transient",
        Phase::Science => "science",
        Phase::Stabilization => "stabilization",
        _ => "other",
    }
}

const SERIES_COLUMNS: [&str; 7] = ["q_x", "q_y", "q_z", "q_w", "w_x", "w_y", "w_z"];

impl MissionHooks for MissionPlant<'_> {
    fn transient_duration(&mut self, default_t: f64, object: Option<&CatalogEntry>) -> Result<f64> {
        if let Some(o) = object {
            self.target = BodyState::attitude(target_attitude(self.seed, o.id), Vec3::zeros());
        }
        let (forecast, duration) = Self::forecast(self.transient, &self.scenario())?;
        if forecast.gains.len() != 2 {
            return Err(Error::Surrogate("transient model must emit [k1, k2]".into()));
        }
        self.next_transient = Some(forecast);
        Ok(duration.unwrap_or(default_t))
    }

    fn on_enter(&mut self, ctx: &PhaseContext) -> Result<()> {
        self.flush()?;
        self.close_recording()?;
        let forecast = match ctx.phase {
            Phase::Transient => {
                let f = self
                    .next_transient
                    .take()
                    .ok_or_else(|| Error::Surrogate("transient entered without a forecast".into()))?;
                self.law = AttitudeLaw::Lyapunov(LyapunovGains { k1: f.gains[0], k2: f.gains[1] });
                Some(f)
            }
            Phase::Science => {
                let f = match self.science {
                    Some(m) => Self::forecast(m, &self.scenario())?.0,
                    None => {
                        let g = self.cfg.science_gains;
                        Forecast {
                            gains: vec![g.k_smc, g.z.x, g.eps.x],
                            predicted: None,
                            clamps: Vec::new(),
                            in_distribution: None,
                        }
                    }
                };
                if f.gains.len() != 3 {
                    return Err(Error::Surrogate("science model must emit [k_smc, Z, eps]".into()));
                }
                self.law = AttitudeLaw::Smc(SmcAttitudeGains::from_triplet([f.gains[0], f.gains[1], f.gains[2]]));
                Some(f)
            }
            Phase::Stabilization => {
                let g = self.cfg.stabilization_gains;
                self.law = AttitudeLaw::Lyapunov(g);
                Some(Forecast { gains: vec![g.k1, g.k2], predicted: None, clamps: Vec::new(), in_distribution: None })
            }
            _ => {
                self.law = AttitudeLaw::Open { torque: Vec3::zeros() };
                None
            }
        };
        self.recording = forecast.map(|f| Recording {
            phase: ctx.phase,
            controller: ctx.controller,
            object: ctx.object.map(|o| o.name.clone()),
            start: ctx.time,
            forecast: f,
            series: Series::new(&SERIES_COLUMNS),
            energy: 0.0,
        });
        Ok(())
    }

    fn advance(&mut self, _ctx: &PhaseContext, dt: f64) -> Result<()> {
        self.time += dt;
        self.pending += dt;
        if self.pending >= self.cfg.plant.dt - 1e-12 {
            self.flush()?;
        }
        Ok(())
    }
}

/// Replays the catalog under the supervisor. At every transient entry the
/// transient surrogate picks `[k₁, k₂, T]` for the next target; science
/// phases use the science surrogate when given and the fixed gains
/// otherwise. Each target's attitude is drawn from `seed` and its id.
pub fn run_supervised_mission(
    transient: Option<&SurrogateModel>,
    science: Option<&SurrogateModel>,
    cfg: &MissionRun,
    seed: u64,
) -> Result<MissionReport> {
    let transient = transient
        .ok_or_else(|| Error::Surrogate("a trained transient surrogate is required to run the mission".into()))?;
    cfg.plant.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bias = cfg.plant.disturbance.sample_torque_bias(&mut rng);
    let mut hooks = MissionPlant {
        cfg,
        transient,
        science,
        seed,
        x: cfg.initial,
        target: BodyState::default(),
        law: AttitudeLaw::Open { torque: Vec3::zeros() },
        rng,
        bias,
        time: 0.0,
        pending: 0.0,
        next_transient: None,
        recording: None,
        records: Vec::new(),
    };
    let mut ta = TimedAutomaton::mission(cfg.catalog.time_scale);
    let (lo, hi) = cfg.mission.transient_bounds;
    let trace = run_mission(&mut ta, &cfg.catalog, 0.5 * (lo + hi), &cfg.mission, &mut hooks)?;
    hooks.flush()?;
    hooks.close_recording()?;
    Ok(MissionReport { trace, phases: hooks.records })
}
