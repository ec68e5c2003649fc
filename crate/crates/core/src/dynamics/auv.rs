use serde::{Deserialize, Serialize};

use super::{pack_derivative, quaternion_rate, BodyState, BodyVector};
use crate::error::{Error, Result};
use crate::mathcore::{abs_times, Quaternion, Vec3};

/// Submerged rigid body with diagonal added mass and linear plus quadratic
/// drag. All matrix-valued parameters are diagonal and stored as their
/// diagonals. Position is in the world frame (z down), velocities in the body
/// frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuvBody {
    /// Rigid-body mass, kg.
    pub m: f64,
    /// Added mass per body axis, kg.
    pub m_added: Vec3,
    /// Rigid-body principal inertia, kg·m².
    pub inertia: Vec3,
    /// Added inertia, kg·m².
    pub inertia_added: Vec3,
    /// Linear translational drag, N·s/m.
    pub d_v1: Vec3,
    /// Quadratic translational drag, N·s²/m².
    pub d_v2: Vec3,
    /// Linear rotational drag, N·m·s.
    pub d_w1: Vec3,
    /// Quadratic rotational drag, N·m·s².
    pub d_w2: Vec3,
    /// Fluid density, kg/m³.
    pub rho: f64,
    /// Displaced volume, m³.
    pub volume: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
}

impl Default for AuvBody {
    /// Small neutrally buoyant vehicle (`ρV = m`).
    fn default() -> Self {
        Self {
            m: 2.5625,
            m_added: Vec3::new(0.36, 1.0, 1.5),
            inertia: Vec3::new(0.006664, 0.023, 0.004515),
            inertia_added: Vec3::new(0.001764, 0.023, 0.002415),
            d_v1: Vec3::new(0.048, 0.0, 0.044),
            d_v2: Vec3::new(5.85, 11.98, 21.85),
            d_w1: Vec3::new(0.0, 0.0, 21.85),
            d_w2: Vec3::zeros(),
            rho: 1025.0,
            volume: 0.0025,
            g: 9.81,
        }
    }
}

impl AuvBody {
    /// Per-axis `m + m_a`.
    pub fn total_mass(&self) -> Vec3 {
        self.m_added.add_scalar(self.m)
    }

    /// Per-axis `J + J_add`.
    pub fn total_inertia(&self) -> Vec3 {
        self.inertia + self.inertia_added
    }

    /// Net hydrostatic force `F_b − m g e₃` in world coordinates.
    pub fn hydrostatic_world(&self) -> Vec3 {
        Vec3::z() * ((self.rho * self.volume - self.m) * self.g)
    }

    /// [`hydrostatic_world`](Self::hydrostatic_world) expressed in the body frame.
    pub fn hydrostatic_body(&self, q: &Quaternion) -> Vec3 {
        q.world_to_body() * self.hydrostatic_world()
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg =
            [self.d_v1, self.d_v2, self.d_w1, self.d_w2, self.m_added].iter().all(|d| d.iter().all(|&c| c >= 0.0));
        if !nonneg {
            return Err(Error::Parameter("drag and added-mass diagonals must be ≥ 0".into()));
        }
        if !(self.m > 0.0) {
            return Err(Error::Parameter("AUV mass must be > 0".into()));
        }
        if !(self.rho * self.volume >= 0.0) {
            return Err(Error::Parameter("ρ·V must be ≥ 0".into()));
        }
        if !self.total_inertia().iter().all(|&j| j > 0.0) {
            return Err(Error::Parameter("AUV inertia must be > 0".into()));
        }
        Ok(())
    }
}

/// `D_v¹ v_r + D_v² (|v_r| ⊙ v_r)`.
pub fn auv_drag_force(v_r: &Vec3, body: &AuvBody) -> Vec3 {
    body.d_v1.component_mul(v_r) + body.d_v2.component_mul(&abs_times(v_r))
}

/// `D_ω¹ ω + D_ω² (|ω| ⊙ ω)`.
pub fn auv_drag_moment(omega: &Vec3, body: &AuvBody) -> Vec3 {
    body.d_w1.component_mul(omega) + body.d_w2.component_mul(&abs_times(omega))
}

/// Body-frame velocity relative to a world-frame current.
pub fn relative_velocity(state: &BodyState, current_world: &Vec3) -> Vec3 {
    state.v - state.q.world_to_body() * current_world
}

/// Hydrodynamic 6-DOF model:
///
/// `ṙ = R(q) v`, `q̇ = ½ q ⊗ ω`,
/// `M_tot v̇ = u − F_drag(v_r) − M_tot(ω × v_r) − (F_b − m g e₃)`,
/// `J_tot ω̇ = τ − ω × J_tot ω − M_drag(ω)`,
///
/// with `v_r = v − R(q)ᵀ v_c` and the current `v_c` given in world axes.
pub fn auv_derivative(state: &BodyState, tau: &Vec3, u: &Vec3, body: &AuvBody, current_world: &Vec3) -> BodyVector {
    let m = body.total_mass();
    let j = body.total_inertia();
    let omega = state.omega;
    let v_r = relative_velocity(state, current_world);

    let force = u - auv_drag_force(&v_r, body) - m.component_mul(&omega.cross(&v_r)) - body.hydrostatic_body(&state.q);
    let v_dot = force.component_div(&m);

    let moment = tau - omega.cross(&j.component_mul(&omega)) - auv_drag_moment(&omega, body);
    let omega_dot = moment.component_div(&j);

    let r_dot = state.q.body_to_world() * state.v;
    pack_derivative(r_dot, v_dot, quaternion_rate(&state.q, &omega), omega_dot)
}
