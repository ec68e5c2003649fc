//! Plant models and disturbance generators.

mod auv;
mod gauss_markov;
mod relative;
mod sensing;
mod spacecraft;

pub use auv::{auv_derivative, auv_drag_force, auv_drag_moment, relative_velocity, AuvBody};
pub use gauss_markov::{gauss_markov_step, GaussMarkovConfig, GaussMarkovProcess};
pub use relative::{
    relative_orbit_derivative, two_body_acceleration, RelativeDerivative, RelativePair, RELATIVE_STATE_DIM,
};
pub use sensing::{measure, DisturbanceModel, LowPassFilter, Measurable, SensorNoise};
pub use spacecraft::{attitude_derivative, SpacecraftBody, MU_EARTH};

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::mathcore::{Quaternion, Vec3};

/// Packed layout of a [`BodyState`]: `r(3) v(3) q(4) ω(3)`.
pub const BODY_STATE_DIM: usize = 13;
/// Offset of the quaternion block inside the packed body state.
pub const BODY_QUAT_OFFSET: usize = 6;

pub type BodyVector = SVector<f64, BODY_STATE_DIM>;

/// Position, velocity, attitude and body rate of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BodyState {
    #[serde(default)]
    pub r: Vec3,
    #[serde(default)]
    pub v: Vec3,
    #[serde(default)]
    pub q: Quaternion,
    #[serde(default)]
    pub omega: Vec3,
}

impl BodyState {
    pub fn attitude(q: Quaternion, omega: Vec3) -> Self {
        Self { q, omega, ..Self::default() }
    }

    pub fn pack(&self) -> BodyVector {
        let mut x = BodyVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.r);
        x.fixed_rows_mut::<3>(3).copy_from(&self.v);
        x.fixed_rows_mut::<4>(BODY_QUAT_OFFSET).copy_from_slice(&self.q.to_array());
        x.fixed_rows_mut::<3>(10).copy_from(&self.omega);
        x
    }

    pub fn unpack(x: &BodyVector) -> Self {
        Self {
            r: x.fixed_rows::<3>(0).into_owned(),
            v: x.fixed_rows::<3>(3).into_owned(),
            q: Quaternion::new(x[6], x[7], x[8], x[9]),
            omega: x.fixed_rows::<3>(10).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pack().iter().all(|v| v.is_finite())
    }
}

/// Derivative of a packed body state from its parts.
pub(crate) fn pack_derivative(r_dot: Vec3, v_dot: Vec3, q_dot: Quaternion, omega_dot: Vec3) -> BodyVector {
    BodyState { r: r_dot, v: v_dot, q: q_dot, omega: omega_dot }.pack()
}

/// `q̇ = ½ q ⊗ ω`.
pub fn quaternion_rate(q: &Quaternion, omega: &Vec3) -> Quaternion {
    (*q * Quaternion::pure(*omega)).scale(0.5)
}
