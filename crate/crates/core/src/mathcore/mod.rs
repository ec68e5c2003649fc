//! Quaternion algebra, 3-vector/matrix aliases, RK4 and the boundary-layer
//! saturation shared by every controller.

mod integrator;
mod quaternion;

pub use integrator::{rk4_step, IntegratorConfig};
pub use quaternion::{principal_angle, quat_error, quat_mul, sign_nonneg, Quaternion};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Boundary-layer saturation: `s/eps` inside `|s| ≤ eps`, `±1` outside.
pub fn sat(s: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("boundary layer must be > 0, got {eps}")));
    }
    Ok(sat_unchecked(s, eps))
}

/// [`sat`] for callers that validated `eps` up front. `eps == 0` degrades to
/// the discontinuous sign law (with `sign(0) = 0`).
#[inline]
pub fn sat_unchecked(s: f64, eps: f64) -> f64 {
    if eps <= 0.0 {
        return if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
    (s / eps).clamp(-1.0, 1.0)
}

/// Componentwise [`sat_unchecked`].
pub fn sat_vec(s: &Vec3, eps: &Vec3) -> Vec3 {
    Vec3::new(sat_unchecked(s.x, eps.x), sat_unchecked(s.y, eps.y), sat_unchecked(s.z, eps.z))
}

pub fn diag(v: Vec3) -> Mat3 {
    Mat3::from_diagonal(&v)
}

/// `|x| ⊙ x`.
pub fn abs_times(x: &Vec3) -> Vec3 {
    x.component_mul(&x.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sat_piecewise_cases() {
        assert_eq!(sat(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(sat(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(sat(-3.0, 0.5).unwrap(), -1.0);
    }

    #[test]
    fn sat_rejects_non_positive_layer() {
        assert!(sat(1.0, 0.0).is_err());
        assert!(sat(1.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn sat_is_odd_lipschitz_and_sign_preserving(
            a in -10.0..10.0f64, b in -10.0..10.0f64, eps in 0.01..5.0f64
        ) {
            let (sa, sb) = (sat(a, eps).unwrap(), sat(b, eps).unwrap());
            prop_assert!(sa * a >= 0.0);
            prop_assert_eq!(sat(-a, eps).unwrap(), -sa);
            // Lipschitz constant of s ↦ sat(s, eps) is 1/eps
            prop_assert!((sa - sb).abs() <= (a - b).abs() / eps + 1e-12);
            prop_assert!(sa.abs() <= 1.0);
        }
    }
}
