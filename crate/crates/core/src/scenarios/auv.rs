use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{RunReport, Series};
use crate::controllers::{
    auv_rotational_surface, auv_rotational_torque, auv_translational_force, auv_translational_surface,
    follower_reference, AuvSmcGains, FormationOffset,
};
use crate::dynamics::{
    auv_derivative, AuvBody, BodyState, GaussMarkovConfig, GaussMarkovProcess, Measurable, SensorNoise,
    BODY_QUAT_OFFSET,
};
use crate::error::{Error, Result};
use crate::mathcore::{rk4_step, IntegratorConfig, Quaternion, Vec3};

/// Leader holds a waypoint, follower holds a fixed world-frame offset from
/// the leader, both in a Gauss–Markov current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuvScenario {
    pub body: AuvBody,
    pub gains: AuvSmcGains,
    /// Leader waypoint, world frame (z down), m.
    pub leader_goal: Vec3,
    pub offset: Vec3,
    pub leader_start: BodyState,
    pub follower_start: BodyState,
    /// World-frame current; its seed is replaced by the run seed.
    pub current: GaussMarkovConfig,
    pub sensor_noise: SensorNoise,
    /// Feed the true current to the drag feed-forward. Off by default: the
    /// controllers only see their own motion.
    pub current_known: bool,
    /// Control period; the command is held over it, s.
    pub control_dt: f64,
    /// RK4 steps per control period. The yaw drag pole sits near
    /// −3150 s⁻¹, so the integration step must stay well below 0.9 ms.
    pub substeps: usize,
    pub duration: f64,
}

impl Default for AuvScenario {
    fn default() -> Self {
        Self {
            body: AuvBody::default(),
            gains: AuvSmcGains::default(),
            leader_goal: Vec3::new(1.0, 2.0, 3.0),
            offset: Vec3::new(3.0, -1.0, 1.0),
            leader_start: BodyState {
                q: Quaternion::from_axis_angle(Vec3::new(0.2, 0.1, 1.0), 0.4),
                ..BodyState::default()
            },
            follower_start: BodyState {
                r: Vec3::new(-1.0, 0.5, 0.0),
                q: Quaternion::from_axis_angle(Vec3::new(-0.1, 0.3, 1.0), -0.3),
                ..BodyState::default()
            },
            current: GaussMarkovConfig {
                tau_corr: 20.0,
                sigma: Vec3::new(0.1, 0.1, 0.04),
                seed: 0,
                initial: Vec3::zeros(),
            },
            // Residual error of the fused navigation estimate, not raw sensors.
            sensor_noise: SensorNoise { attitude: 3e-5, rate: 3e-5, position: 3e-5, velocity: 3e-5 },
            current_known: false,
            control_dt: 2e-3,
            substeps: 10,
            duration: 40.0,
        }
    }
}

impl AuvScenario {
    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        self.gains.validate()?;
        self.current.validate()?;
        self.sensor_noise.validate()?;
        if !(self.control_dt > 0.0 && self.duration > 0.0 && self.substeps > 0) {
            return Err(Error::Config("control_dt, duration and substeps must be > 0".into()));
        }
        Ok(())
    }

    /// Same run with the current and sensing noise switched off.
    pub fn calm(&self) -> Self {
        Self {
            current: GaussMarkovConfig { sigma: Vec3::zeros(), initial: Vec3::zeros(), ..self.current },
            sensor_noise: SensorNoise::default(),
            ..*self
        }
    }
}

/// Leader and follower reports of one formation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuvFormationReport {
    /// Error column: distance to the waypoint.
    pub leader: RunReport,
    /// Error column: distance to `r_L + d`.
    pub follower: RunReport,
    /// Largest `|‖q‖ − 1|` after any integration step, either vehicle.
    pub max_quaternion_norm_drift: f64,
}

const COLUMNS: [&str; 22] = [
    "tau_x", "tau_y", "tau_z", "r_x", "r_y", "r_z", "ref_x", "ref_y", "ref_z", "q_x", "q_y", "q_z", "q_w", "sv_x",
    "sv_y", "sv_z", "sw_x", "sw_y", "sw_z", "c_x", "c_y", "c_z",
];

struct Command {
    u: Vec3,
    tau: Vec3,
    r_d: Vec3,
    s_v: Vec3,
    s_w: Vec3,
}

fn command(seen: &BodyState, r_d: Vec3, v_d: Vec3, q_d: &Quaternion, w_d: &Vec3, c: &Vec3, s: &AuvScenario) -> Command {
    Command {
        u: auv_translational_force(seen, &r_d, &v_d, &s.body, c, &s.gains),
        tau: auv_rotational_torque(seen, q_d, w_d, &s.body, &s.gains),
        r_d,
        s_v: auv_translational_surface(seen, &r_d, &v_d, &s.gains),
        s_w: auv_rotational_surface(seen, q_d, w_d, &s.gains),
    }
}

fn power(x: &BodyState, c: &Command) -> f64 {
    c.u.dot(&x.v).abs() + c.tau.dot(&x.omega).abs()
}

fn row(t: f64, h: f64, before: &BodyState, after: &BodyState, c: &Command, error: f64, current: &Vec3) -> Vec<f64> {
    let mut r = vec![t, h, power(before, c), power(after, c), error, c.u.x, c.u.y, c.u.z];
    r.extend(c.tau.iter());
    r.extend(after.r.iter());
    r.extend(c.r_d.iter());
    r.extend(after.q.to_array());
    r.extend(c.s_v.iter().chain(c.s_w.iter()).chain(current.iter()));
    r
}

/// Runs the leader–follower pair. The leader tracks the waypoint at rest
/// with identity attitude; the follower tracks `r_L + d`, the leader's
/// world velocity and the leader's attitude and rate, all taken from the
/// leader's measured state.
pub fn run_auv_formation(scenario: &AuvScenario, seed: u64) -> Result<AuvFormationReport> {
    scenario.validate()?;
    let s = scenario;
    let mut current = GaussMarkovProcess::new(&GaussMarkovConfig { seed, ..s.current })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let offset = FormationOffset { d: s.offset };
    let h = s.control_dt / s.substeps as f64;
    let sub = IntegratorConfig::new(h)?;
    let n = ((s.duration / s.control_dt) - 1e-9).ceil().max(1.0) as usize;
    let identity = Quaternion::identity();

    let mut leader_series = Series::new(&COLUMNS);
    let mut follower_series = Series::new(&COLUMNS);
    let (mut xl, mut xf) = (s.leader_start, s.follower_start);
    let mut drift: f64 = 0.0;
    let mut c_world = current.value;
    for k in 0..n {
        let t = k as f64 * s.control_dt;
        let c_est = if s.current_known { c_world } else { Vec3::zeros() };
        let seen_l = xl.measured(&s.sensor_noise, &mut rng);
        let seen_f = xf.measured(&s.sensor_noise, &mut rng);

        let cl = command(&seen_l, s.leader_goal, Vec3::zeros(), &identity, &Vec3::zeros(), &c_est, s);
        let (r_d, v_d) = follower_reference(&seen_l, &offset);
        let cf = command(&seen_f, r_d, v_d, &seen_l.q, &seen_l.omega, &c_est, s);

        let (l0, f0) = (xl, xf);
        for _ in 0..s.substeps {
            let c_now = c_world;
            let step = |x: &BodyState, c: &Command| {
                rk4_step(
                    |_, v| auv_derivative(&BodyState::unpack(v), &c.tau, &c.u, &s.body, &c_now),
                    &x.pack(),
                    t,
                    &sub,
                    &[BODY_QUAT_OFFSET],
                )
                .map(|v| BodyState::unpack(&v))
            };
            xl = step(&xl, &cl)?;
            xf = step(&xf, &cf)?;
            drift = drift.max((xl.q.norm() - 1.0).abs()).max((xf.q.norm() - 1.0).abs());
            c_world = current.step(h)?;
        }
        if !(xl.is_finite() && xf.is_finite()) {
            return Err(Error::IntegrationFault { t });
        }
        let true_ref = xl.r + s.offset;
        leader_series.push(row(t, s.control_dt, &l0, &xl, &cl, (xl.r - s.leader_goal).norm(), &c_world));
        follower_series.push(row(t, s.control_dt, &f0, &xf, &cf, (xf.r - true_ref).norm(), &c_world));
    }
    let label =
        if s.gains.eps_v.iter().chain(s.gains.eps_w.iter()).all(|&e| e > 0.0) { "auv_smc" } else { "auv_smc_sign" };
    Ok(AuvFormationReport {
        leader: RunReport::new("auv_leader", label, seed, "m", leader_series, false)?,
        follower: RunReport::new("auv_follower", label, seed, "m", follower_series, false)?,
        max_quaternion_norm_drift: drift,
    })
}
