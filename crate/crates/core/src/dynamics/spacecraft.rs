use serde::{Deserialize, Serialize};

use super::{pack_derivative, quaternion_rate, BodyState, BodyVector};
use crate::error::{Error, Result};
use crate::mathcore::{diag, Mat3, Vec3};

/// Earth gravitational parameter, m³/s².
pub const MU_EARTH: f64 = 3.986_004_418e14;

/// Rigid spacecraft: nominal inertia plus an uncertainty term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftBody {
    /// Nominal inertia, kg·m².
    pub j_nominal: Mat3,
    /// Inertia uncertainty ΔJ, kg·m².
    #[serde(default)]
    pub j_uncertainty: Mat3,
    /// Gravitational parameter, m³/s².
    #[serde(default = "default_mu")]
    pub mu: f64,
}

fn default_mu() -> f64 {
    MU_EARTH
}

impl Default for SpacecraftBody {
    /// `J̄ = diag(1.2, 1.3, 0.9)` kg·m², no uncertainty.
    fn default() -> Self {
        Self { j_nominal: diag(Vec3::new(1.2, 1.3, 0.9)), j_uncertainty: Mat3::zeros(), mu: MU_EARTH }
    }
}

impl SpacecraftBody {
    /// True inertia `J̄ + ΔJ`.
    pub fn inertia(&self) -> Mat3 {
        self.j_nominal + self.j_uncertainty
    }

    /// Checks that `J̄ + ΔJ` is symmetric positive definite.
    pub fn validate(&self) -> Result<()> {
        let j = self.inertia();
        if (j - j.transpose()).abs().max() > 1e-12 * j.abs().max().max(1.0) {
            return Err(Error::Parameter("inertia is not symmetric".into()));
        }
        if j.cholesky().is_none() {
            return Err(Error::Parameter("inertia is not positive definite".into()));
        }
        Ok(())
    }
}

/// Rigid-body attitude dynamics: `q̇ = ½ q ⊗ ω`,
/// `ω̇ = J⁻¹(τ − ω × Jω + d_ω)` with the true inertia. Translation is inert.
pub fn attitude_derivative(state: &BodyState, tau: &Vec3, body: &SpacecraftBody, d_omega: &Vec3) -> BodyVector {
    let j = body.inertia();
    let omega = state.omega;
    let rhs = tau - omega.cross(&(j * omega)) + d_omega;
    let omega_dot = solve3(&j, &rhs);
    pack_derivative(state.v, Vec3::zeros(), quaternion_rate(&state.q, &omega), omega_dot)
}

/// `J⁻¹ b` for an SPD 3×3; diagonal inertias take the cheap path.
pub(crate) fn solve3(j: &Mat3, b: &Vec3) -> Vec3 {
    if j.m12 == 0.0 && j.m13 == 0.0 && j.m23 == 0.0 && j.m21 == 0.0 && j.m31 == 0.0 && j.m32 == 0.0 {
        return Vec3::new(b.x / j.m11, b.y / j.m22, b.z / j.m33);
    }
    match j.try_inverse() {
        Some(inv) => inv * b,
        None => Vec3::repeat(f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BODY_STATE_DIM;
    use crate::mathcore::{rk4_step, IntegratorConfig, Quaternion};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rest_is_an_equilibrium() {
        let body = SpacecraftBody::default();
        let d = attitude_derivative(&BodyState::default(), &Vec3::zeros(), &body, &Vec3::zeros());
        assert_eq!(d, BodyVector::zeros());
    }

    #[test]
    fn torque_about_x_accelerates_by_inverse_inertia() {
        let body = SpacecraftBody::default();
        let d = attitude_derivative(&BodyState::default(), &Vec3::new(1.2, 0.0, 0.0), &body, &Vec3::zeros());
        let omega_dot = BodyState::unpack(&d).omega;
        assert_abs_diff_eq!(omega_dot, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn axis_aligned_spin_has_no_gyroscopic_term() {
        let body = SpacecraftBody::default();
        let s = BodyState::attitude(Quaternion::identity(), Vec3::new(1.0, 0.0, 0.0));
        let tau = Vec3::new(0.3, -0.2, 0.1);
        let dist = Vec3::new(0.01, 0.02, -0.03);
        let omega_dot = BodyState::unpack(&attitude_derivative(&s, &tau, &body, &dist)).omega;
        let j = body.inertia();
        let expected = Vec3::new((tau + dist).x / j.m11, (tau + dist).y / j.m22, (tau + dist).z / j.m33);
        assert_abs_diff_eq!(omega_dot, expected, epsilon = 1e-15);
    }

    #[test]
    fn rejects_indefinite_inertia() {
        let body = SpacecraftBody {
            j_nominal: diag(Vec3::new(1.0, 1.0, 1.0)),
            j_uncertainty: diag(Vec3::new(0.0, 0.0, -2.0)),
            mu: MU_EARTH,
        };
        assert!(body.validate().is_err());
        assert!(SpacecraftBody::default().validate().is_ok());
    }

    #[test]
    fn torque_free_motion_conserves_kinetic_energy() {
        let body = SpacecraftBody::default();
        let j = body.inertia();
        let cfg = IntegratorConfig::new(1e-3).unwrap();
        let s0 = BodyState::attitude(Quaternion::identity(), Vec3::new(0.3, -0.5, 0.2));
        let energy = |s: &BodyState| 0.5 * s.omega.dot(&(j * s.omega));
        let e0 = energy(&s0);
        let mut x = s0.pack();
        for k in 0..10_000 {
            x = rk4_step::<BODY_STATE_DIM, _>(
                |_, x| attitude_derivative(&BodyState::unpack(x), &Vec3::zeros(), &body, &Vec3::zeros()),
                &x,
                k as f64 * cfg.dt,
                &cfg,
                &[crate::dynamics::BODY_QUAT_OFFSET],
            )
            .unwrap();
            let q = BodyState::unpack(&x).q;
            assert!((q.norm() - 1.0).abs() <= 1e-9);
        }
        let e1 = energy(&BodyState::unpack(&x));
        assert!(((e1 - e0) / e0).abs() < 1e-6);
    }
}
