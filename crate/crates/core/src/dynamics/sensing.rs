//! Additive-noise sensing and bounded disturbance sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BodyState, RelativePair};
use crate::error::{Error, Result};
use crate::mathcore::{Quaternion, Vec3};

/// Per-channel standard deviations of the measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorNoise {
    /// Attitude, rad (small rotation about each body axis).
    pub attitude: f64,
    /// Body rate, rad/s.
    pub rate: f64,
    /// Position, m.
    pub position: f64,
    /// Velocity, m/s.
    pub velocity: f64,
}

impl SensorNoise {
    pub fn validate(&self) -> Result<()> {
        if [self.attitude, self.rate, self.position, self.velocity].iter().all(|&s| s >= 0.0) {
            Ok(())
        } else {
            Err(Error::Parameter("sensor noise std must be ≥ 0".into()))
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

/// Bounded disturbances and sensing noise for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceModel {
    pub enabled: bool,
    /// Per-axis bound of the constant torque bias, N·m.
    pub torque_bias: Vec3,
    /// Std of white torque/force noise added on top of the bias (N·m or N).
    pub force_noise_std: f64,
    pub sensor_noise_std: SensorNoise,
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        Self {
            enabled: false,
            torque_bias: Vec3::zeros(),
            force_noise_std: 0.0,
            sensor_noise_std: SensorNoise::default(),
        }
    }
}

impl DisturbanceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.force_noise_std >= 0.0) || !self.torque_bias.iter().all(|&b| b >= 0.0) {
            return Err(Error::Parameter("disturbance bounds and stds must be ≥ 0".into()));
        }
        self.sensor_noise_std.validate()
    }

    /// Draws a constant bias uniformly inside `±torque_bias` per axis.
    pub fn sample_torque_bias<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        if !self.enabled {
            return Vec3::zeros();
        }
        self.torque_bias.map(|b| if b > 0.0 { rng.random_range(-b..=b) } else { 0.0 })
    }

    /// White noise sample to add to the bias at one control step.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        if !self.enabled || self.force_noise_std == 0.0 {
            return Vec3::zeros();
        }
        gaussian3(rng) * self.force_noise_std
    }
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::from_fn(|_, _| StandardNormal.sample(rng))
}

/// States that can be observed through additive Gaussian noise.
pub trait Measurable: Sized {
    fn measured<R: Rng + ?Sized>(&self, noise: &SensorNoise, rng: &mut R) -> Self;
}

impl Measurable for BodyState {
    fn measured<R: Rng + ?Sized>(&self, noise: &SensorNoise, rng: &mut R) -> Self {
        if noise.is_zero() {
            return *self;
        }
        let dtheta = gaussian3(rng) * noise.attitude;
        let q = (self.q * Quaternion::from_axis_angle(dtheta, dtheta.norm())).normalized();
        Self {
            r: self.r + gaussian3(rng) * noise.position,
            v: self.v + gaussian3(rng) * noise.velocity,
            q,
            omega: self.omega + gaussian3(rng) * noise.rate,
        }
    }
}

impl Measurable for RelativePair {
    /// Noise is applied to the relative channels only; the members are kept
    /// consistent with them through the leader.
    fn measured<R: Rng + ?Sized>(&self, noise: &SensorNoise, rng: &mut R) -> Self {
        if noise.is_zero() {
            return *self;
        }
        RelativePair::from_relative(
            self.leader,
            self.r_rel + gaussian3(rng) * noise.position,
            self.v_rel + gaussian3(rng) * noise.velocity,
        )
    }
}

/// Noisy measurement of `state` under `d`; truth when `d` is disabled.
pub fn measure<S: Measurable + Copy, R: Rng + ?Sized>(state: &S, d: &DisturbanceModel, rng: &mut R) -> S {
    if !d.enabled {
        return *state;
    }
    state.measured(&d.sensor_noise_std, rng)
}

/// First-order low-pass `T ẏ + y = x`, discretized exactly for inputs held
/// over each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPassFilter {
    pub time_constant: f64,
    pub output: Vec3,
}

impl LowPassFilter {
    pub fn new(time_constant: f64, initial: Vec3) -> Result<Self> {
        if !(time_constant > 0.0) {
            return Err(Error::Parameter(format!("low-pass time constant must be > 0, got {time_constant}")));
        }
        Ok(Self { time_constant, output: initial })
    }

    pub fn update(&mut self, input: &Vec3, dt: f64) -> Vec3 {
        let alpha = 1.0 - (-dt / self.time_constant).exp();
        self.output += (input - self.output) * alpha;
        self.output
    }
}
