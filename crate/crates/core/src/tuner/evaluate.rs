use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::ScenarioSample;
use crate::controllers::{
    lyapunov_attitude_torque, pd_attitude_torque, smc_attitude_torque, LyapunovGains, PdGains, SmcAttitudeGains,
};
use crate::dynamics::{
    attitude_derivative, measure, BodyState, DisturbanceModel, SensorNoise, SpacecraftBody, BODY_QUAT_OFFSET,
};
use crate::error::{Error, Result};
use crate::mathcore::{principal_angle, quat_error, rk4_step, IntegratorConfig, Mat3, Quaternion, Vec3};

/// Attitude feedback law driven by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AttitudeLaw {
    Lyapunov(LyapunovGains),
    Smc(SmcAttitudeGains),
    Pd(PdGains),
    /// Constant commanded torque, N·m.
    Open {
        torque: Vec3,
    },
}

impl AttitudeLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttitudeLaw::Lyapunov(g) => g.validate(),
            AttitudeLaw::Smc(g) => g.validate(),
            AttitudeLaw::Pd(g) => g.validate(),
            AttitudeLaw::Open { torque } if torque.iter().all(|v| v.is_finite()) => Ok(()),
            AttitudeLaw::Open { .. } => Err(Error::Parameter("open-loop torque must be finite".into())),
        }
    }

    /// Commanded torque from the measured error `∂q = q_f* ⊗ q` and rate.
    /// The target rate is held constant, so its derivative is zero.
    pub fn torque(&self, dq: &Quaternion, omega: &Vec3, omega_f: &Vec3, j_model: &Mat3) -> Vec3 {
        match self {
            AttitudeLaw::Lyapunov(g) => lyapunov_attitude_torque(dq, omega, g),
            AttitudeLaw::Smc(g) => smc_attitude_torque(dq, omega, omega_f, &Vec3::zeros(), j_model, g),
            AttitudeLaw::Pd(g) => pd_attitude_torque(dq, omega, omega_f, g),
            AttitudeLaw::Open { torque } => *torque,
        }
    }
}

/// Spacecraft plant, control step and disturbance environment of an
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    pub body: SpacecraftBody,
    /// Control and integration step, s.
    pub dt: f64,
    pub disturbance: DisturbanceModel,
}

impl Default for PlantConfig {
    /// Nominal inertia, 20 Hz control, a 10 µN·m torque bias bound and
    /// arcsecond-class attitude noise.
    fn default() -> Self {
        Self {
            body: SpacecraftBody::default(),
            dt: 0.05,
            disturbance: DisturbanceModel {
                enabled: true,
                torque_bias: Vec3::repeat(1e-5),
                force_noise_std: 0.0,
                sensor_noise_std: SensorNoise { attitude: 5e-6, rate: 1e-6, position: 0.0, velocity: 0.0 },
            },
        }
    }
}

impl PlantConfig {
    /// Science-pointing environment: a torque bias bound of 0.2 mN·m per
    /// axis, large enough that bias rejection sets the terminal error.
    pub fn science() -> Self {
        let mut p = Self::default();
        p.disturbance.torque_bias = Vec3::repeat(2e-4);
        p
    }

    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        IntegratorConfig::new(self.dt)?;
        self.disturbance.validate()
    }

    /// Same plant without any disturbance or noise.
    pub fn quiet(&self) -> Self {
        Self { disturbance: DisturbanceModel::default(), ..*self }
    }
}

/// Cost of one closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostVector {
    /// `E = ∫ |τᵀω| dt`, J.
    pub energy: f64,
    /// `e = min(‖q − q_f‖, ‖q + q_f‖)` at the final time.
    pub error: f64,
    /// Principal angle of the final attitude error, degrees.
    pub error_deg: f64,
}

impl CostVector {
    /// Cost given to runs that diverged; dominated by every finite cost.
    pub const DIVERGED: Self = Self { energy: f64::INFINITY, error: f64::INFINITY, error_deg: f64::INFINITY };

    pub fn is_finite(&self) -> bool {
        self.energy.is_finite() && self.error.is_finite() && self.error_deg.is_finite()
    }

    /// Terminal attitude error of `q` against `q_f`.
    pub fn terminal(energy: f64, q: &Quaternion, q_f: &Quaternion) -> Self {
        Self { energy, error: q.rotation_distance(q_f), error_deg: principal_angle(quat_error(*q, *q_f)).to_degrees() }
    }
}

/// `w₁E + w₂e + w₃T` with `e` in degrees.
pub fn scalarize(chi: &CostVector, t: f64, w: &Vec3) -> f64 {
    w.x * chi.energy + w.y * chi.error_deg + w.z * t
}

/// Trapezoidal integral of samples spaced `dt` apart.
pub fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    samples.windows(2).map(|p| 0.5 * dt * (p[0] + p[1])).sum()
}

/// Result of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// [`CostVector::DIVERGED`] when `diverged`.
    pub cost: CostVector,
    /// Final true state; the last finite state when the run diverged.
    pub terminal: BodyState,
    pub diverged: bool,
    pub steps: usize,
}

/// One control step as seen by an observer: the true state at the start
/// of the step and what the controller did with its measurement.
#[derive(Debug, Clone, Copy)]
pub struct AttitudeStep {
    pub t: f64,
    pub h: f64,
    pub state: BodyState,
    pub measured: BodyState,
    /// Measured error `q_f* ⊗ q̃`.
    pub dq: Quaternion,
    pub torque: Vec3,
    /// Disturbance torque acting over the step.
    pub disturbance: Vec3,
}

/// One closed-loop run of the attitude plant under `law` for `duration`
/// seconds toward `xf`.
///
/// Control is held over each step. The last step is shortened so the run
/// ends exactly at `duration`. Energy is the trapezoid of `|τᵀω|` over the
/// step ends. Noise and bias come from a stream seeded by `seed`.
pub fn simulate_attitude(
    x0: &BodyState,
    xf: &BodyState,
    law: &AttitudeLaw,
    duration: f64,
    plant: &PlantConfig,
    seed: u64,
    mut observer: Option<&mut dyn FnMut(&AttitudeStep)>,
) -> Result<Evaluation> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Parameter(format!("run duration must be > 0, got {duration}")));
    }
    law.validate()?;
    plant.validate()?;
    let dt = plant.dt;
    let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    let j_model = plant.body.j_nominal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bias = plant.disturbance.sample_torque_bias(&mut rng);
    let full = IntegratorConfig::new(dt)?;

    let mut x = *x0;
    let mut energy = 0.0;
    for k in 0..n {
        let t = k as f64 * dt;
        let last = k + 1 == n;
        let h = if last { duration - t } else { dt };
        let cfg = if last { IntegratorConfig::new(h)? } else { full };

        let measured = measure(&x, &plant.disturbance, &mut rng);
        let dq = quat_error(measured.q, xf.q);
        let torque = law.torque(&dq, &measured.omega, &xf.omega, &j_model);
        let disturbance = bias + plant.disturbance.sample_noise(&mut rng);
        if let Some(obs) = observer.as_deref_mut() {
            obs(&AttitudeStep { t, h, state: x, measured, dq, torque, disturbance });
        }

        let p0 = torque.dot(&x.omega).abs();
        let next = rk4_step(
            |_, v| attitude_derivative(&BodyState::unpack(v), &torque, &plant.body, &disturbance),
            &x.pack(),
            t,
            &cfg,
            &[BODY_QUAT_OFFSET],
        );
        let next = match next {
            Ok(v) if v.iter().all(|c| c.is_finite()) => BodyState::unpack(&v),
            Ok(_) | Err(Error::IntegrationFault { .. }) => {
                log::warn!("attitude run diverged at t = {t} s");
                return Ok(Evaluation { cost: CostVector::DIVERGED, terminal: x, diverged: true, steps: k });
            }
            Err(e) => return Err(e),
        };
        let p1 = torque.dot(&next.omega).abs();
        energy += 0.5 * h * (p0 + p1);
        x = next;
    }
    Ok(Evaluation { cost: CostVector::terminal(energy, &x.q, &xf.q), terminal: x, diverged: false, steps: n })
}

/// Runs `law` on a sampled scenario for `t` seconds.
pub fn evaluate(scenario: &ScenarioSample, law: &AttitudeLaw, t: f64, plant: &PlantConfig) -> Result<Evaluation> {
    simulate_attitude(&scenario.x0, &scenario.xf, law, t, plant, scenario.seed, None)
}

/// One leg of a chained evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLeg {
    pub law: AttitudeLaw,
    pub duration: f64,
    /// Target of this leg.
    pub target: BodyState,
}

/// Seed of leg `i` of a chain started from `seed`.
pub fn leg_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the legs in order, each starting from the previous leg's final
/// state. Stops after the first diverged leg.
pub fn evaluate_chain(scenario: &ScenarioSample, legs: &[PhaseLeg], plant: &PlantConfig) -> Result<Vec<Evaluation>> {
    let mut out: Vec<Evaluation> = Vec::with_capacity(legs.len());
    let mut x = scenario.x0;
    for (i, leg) in legs.iter().enumerate() {
        let ev = simulate_attitude(&x, &leg.target, &leg.law, leg.duration, plant, leg_seed(scenario.seed, i), None)?;
        x = ev.terminal;
        out.push(ev);
        if ev.diverged {
            break;
        }
    }
    Ok(out)
}
