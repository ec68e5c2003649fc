use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::BodyState;
use crate::error::{Error, Result};
use crate::mathcore::{Quaternion, Vec3};

/// Number of surrogate input features: `q₀`, `ω₀`, `w`, `q_f`, `ω_f`.
pub const FEATURE_DIM: usize = 17;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "q0_x", "q0_y", "q0_z", "q0_w", "w0_x", "w0_y", "w0_z", "w_energy", "w_error", "w_time", "qf_x", "qf_y", "qf_z",
    "qf_w", "wf_x", "wf_y", "wf_z",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl Uniform {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: bounds [{}, {}] are not ordered", self.lo, self.hi)))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normal {
    pub mean: f64,
    pub std: f64,
}

impl Normal {
    pub const fn new(mean: f64, std: f64) -> Self {
        Self { mean, std }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.mean.is_finite() && self.std >= 0.0 && self.std.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: need finite mean and std ≥ 0, got N({}, {})", self.mean, self.std)))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n: f64 = StandardNormal.sample(rng);
        self.mean + self.std * n
    }
}

/// Scenario distributions: quaternion components uniform then normalized,
/// rates Gaussian per axis (rad/s), weights `[N, U, U]` for energy, error and
/// duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioDistributions {
    pub q0: [Uniform; 4],
    pub qf: [Uniform; 4],
    pub omega0: Normal,
    pub omega_f: Normal,
    pub w_energy: Normal,
    pub w_error: Uniform,
    pub w_time: Uniform,
}

impl Default for ScenarioDistributions {
    fn default() -> Self {
        let full = [Uniform::new(-1.0, 1.0); 4];
        Self {
            q0: full,
            qf: full,
            omega0: Normal::new(0.0, 0.01),
            omega_f: Normal::new(0.0, 1e-3),
            w_energy: Normal::new(1.0, 0.1),
            w_error: Uniform::new(5.0, 15.0),
            w_time: Uniform::new(1e-3, 5e-3),
        }
    }
}

impl ScenarioDistributions {
    /// Science hand-off: the target attitude is the reference frame and the
    /// craft starts within about 10° of it with a small residual rate.
    pub fn science() -> Self {
        let tilt = Uniform::new(-0.05, 0.05);
        let fixed = |v| Uniform::new(v, v);
        Self {
            q0: [tilt, tilt, tilt, fixed(1.0)],
            qf: [fixed(0.0), fixed(0.0), fixed(0.0), fixed(1.0)],
            omega0: Normal::new(0.0, 1e-3),
            omega_f: Normal::new(0.0, 0.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, u) in self.q0.iter().enumerate() {
            u.validate(&format!("q0[{i}]"))?;
        }
        for (i, u) in self.qf.iter().enumerate() {
            u.validate(&format!("qf[{i}]"))?;
        }
        self.omega0.validate("omega0")?;
        self.omega_f.validate("omega_f")?;
        self.w_energy.validate("w_energy")?;
        self.w_error.validate("w_error")?;
        self.w_time.validate("w_time")
    }
}

/// One Monte-Carlo draw: initial and target attitude states, the cost
/// weights, and the seed of its disturbance stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSample {
    pub x0: BodyState,
    pub xf: BodyState,
    pub w: Vec3,
    pub seed: u64,
}

impl ScenarioSample {
    /// Surrogate features with both quaternions on the `q₄ ≥ 0` hemisphere.
    pub fn features(&self) -> [f64; FEATURE_DIM] {
        let q0 = self.x0.q.canonical().to_array();
        let qf = self.xf.q.canonical().to_array();
        let mut f = [0.0; FEATURE_DIM];
        f[0..4].copy_from_slice(&q0);
        f[4..7].copy_from_slice(self.x0.omega.as_slice());
        f[7..10].copy_from_slice(self.w.as_slice());
        f[10..14].copy_from_slice(&qf);
        f[14..17].copy_from_slice(self.xf.omega.as_slice());
        f
    }

    /// Next phase of the same scenario starting exactly where this one ended.
    pub fn chained(&self, terminal: &BodyState, xf: BodyState, seed: u64) -> Self {
        Self { x0: *terminal, xf, w: self.w, seed }
    }
}

fn sample_quaternion<R: Rng + ?Sized>(box4: &[Uniform; 4], rng: &mut R) -> Result<Quaternion> {
    for _ in 0..64 {
        let q = Quaternion::from_array([
            box4[0].sample(rng),
            box4[1].sample(rng),
            box4[2].sample(rng),
            box4[3].sample(rng),
        ]);
        if q.norm() > 1e-6 {
            return Ok(q.normalized());
        }
    }
    Err(Error::Config("quaternion component box only yields near-zero vectors".into()))
}

/// Draws one scenario. The scenario's own seed is taken from `rng`, so a
/// seeded generator reproduces the whole campaign.
pub fn sample_scenario(dists: &ScenarioDistributions, rng: &mut ChaCha8Rng) -> Result<ScenarioSample> {
    dists.validate()?;
    let q0 = sample_quaternion(&dists.q0, rng)?;
    let omega0 = Vec3::from_fn(|_, _| dists.omega0.sample(rng));
    let qf = sample_quaternion(&dists.qf, rng)?;
    let omega_f = Vec3::from_fn(|_, _| dists.omega_f.sample(rng));
    let w = Vec3::new(dists.w_energy.sample(rng), dists.w_error.sample(rng), dists.w_time.sample(rng));
    Ok(ScenarioSample {
        x0: BodyState::attitude(q0, omega0),
        xf: BodyState::attitude(qf, omega_f),
        w,
        seed: rng.random(),
    })
}

/// `n` scenarios from one campaign seed.
pub fn sample_campaign(dists: &ScenarioDistributions, n: usize, seed: u64) -> Result<Vec<ScenarioSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_scenario(dists, &mut rng)).collect()
}
