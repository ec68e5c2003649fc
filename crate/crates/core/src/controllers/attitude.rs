use super::{LyapunovGains, PdGains, SmcAttitudeGains};
use crate::mathcore::{sat_vec, sign_nonneg, Mat3, Quaternion, Vec3};

/// `τ = −k₁ sign(∂q₄) ∂q₁:₃ − k₂ (1 − ∂q₁:₃ᵀ∂q₁:₃) ω`.
pub fn lyapunov_attitude_torque(dq: &Quaternion, omega: &Vec3, g: &LyapunovGains) -> Vec3 {
    let dv = dq.vector();
    -dv * (g.k1 * sign_nonneg(dq.w)) - omega * (g.k2 * (1.0 - dv.norm_squared()))
}

/// `V = ¼ ωᵀJω + ½ k₁ ‖∂q₁:₃‖² + ½ k₂ (1 − |∂q₄|)²`.
///
/// The last term uses `|∂q₄|` so that `V` measures the distance to the nearer
/// of the two equilibria `∂q₄ = ±1`, which is the one the sign-switched law
/// converges to.
pub fn lyapunov_value(dq: &Quaternion, omega: &Vec3, j: &Mat3, g: &LyapunovGains) -> f64 {
    let kinetic = 0.25 * omega.dot(&(j * omega));
    let tilt = 0.5 * g.k1 * dq.vector().norm_squared();
    let scalar = 1.0 - dq.w.abs();
    kinetic + tilt + 0.5 * g.k2 * scalar * scalar
}

/// `s = (ω − ω_f) + k_SMC sign(∂q₄) ∂q₁:₃`.
pub fn smc_attitude_surface(dq: &Quaternion, omega: &Vec3, omega_f: &Vec3, k_smc: f64) -> Vec3 {
    (omega - omega_f) + dq.vector() * (k_smc * sign_nonneg(dq.w))
}

/// Sliding-mode attitude torque
///
/// `τ = J{ ½k[|∂q₄|(ω_f − ω) − sign(∂q₄) ∂q₁:₃ × (ω_f + ω)] + ω̇_f − Z sat(s, ε) } + ω × Jω`.
///
/// The bracket is `−k sign(∂q₄) ∂q̇₁:₃`, so in closed loop `ṡ = −Z sat(s, ε) + J⁻¹d`.
pub fn smc_attitude_torque(
    dq: &Quaternion,
    omega: &Vec3,
    omega_f: &Vec3,
    omega_f_dot: &Vec3,
    j: &Mat3,
    g: &SmcAttitudeGains,
) -> Vec3 {
    let sgn = sign_nonneg(dq.w);
    let dv = dq.vector();
    let s = smc_attitude_surface(dq, omega, omega_f, g.k_smc);
    let kinematic = ((omega_f - omega) * dq.w.abs() - (dv * sgn).cross(&(omega_f + omega))) * (0.5 * g.k_smc);
    let reaching = g.z.component_mul(&sat_vec(&s, &g.eps));
    j * (kinematic + omega_f_dot - reaching) + omega.cross(&(j * omega))
}

/// Attitude PD baseline `τ = −P sign(∂q₄) ∂q₁:₃ − D (ω − ω_f)`.
pub fn pd_attitude_torque(dq: &Quaternion, omega: &Vec3, omega_f: &Vec3, g: &PdGains) -> Vec3 {
    -dq.vector() * (g.p * sign_nonneg(dq.w)) - (omega - omega_f) * g.d
}
