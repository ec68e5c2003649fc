//! Unit quaternions in scalar-last storage `(x, y, z, w)` with the Hamilton
//! product.
//!
//! Attitude kinematics throughout the crate use `q̇ = ½ q ⊗ ω` with body-frame
//! rates, so `q` rotates body coordinates into the reference frame.

use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use super::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    pub const fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0)
    }

    pub fn from_vector_scalar(v: Vec3, w: f64) -> Self {
        Self::new(v.x, v.y, v.z, w)
    }

    /// Pure quaternion `(v, 0)`.
    pub fn pure(v: Vec3) -> Self {
        Self::from_vector_scalar(v, 0.0)
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_vector_scalar(axis * (s / n), c)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn scalar(&self) -> f64 {
        self.w
    }

    pub fn conj(&self) -> Self {
        Self::new(-self.x, -self.y, -self.z, self.w)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n, self.z / n, self.w / n)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s, self.w * s)
    }

    /// Representative of the same rotation with a non-negative scalar part.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            -*self
        } else {
            *self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }

    /// Rotation matrix taking body coordinates to reference coordinates.
    pub fn body_to_world(&self) -> Mat3 {
        let Self { x, y, z, w } = *self;
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn world_to_body(&self) -> Mat3 {
        self.body_to_world().transpose()
    }

    /// Distance between rotations, blind to the double cover:
    /// `min(|a − b|, |a + b|)`.
    pub fn rotation_distance(&self, other: &Self) -> f64 {
        let minus = (*self + other.neg()).norm();
        let plus = (*self + *other).norm();
        minus.min(plus)
    }
}

impl std::ops::Add for Quaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z, self.w + o.w)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z, -self.w)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        quat_mul(self, b)
    }
}

/// Hamilton product `a ⊗ b`.
pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    let av = a.vector();
    let bv = b.vector();
    let v = bv * a.w + av * b.w + av.cross(&bv);
    Quaternion::from_vector_scalar(v, a.w * b.w - av.dot(&bv))
}

/// Attitude error `∂q = q_f* ⊗ q`, the rotation carrying the target frame onto
/// the current one; `q ⊗ ∂q* = q_f`.
///
/// With `q̇ = ½ q ⊗ ω` this gives `∂q̇ = ½ ∂q ⊗ ω`, so `∂q̇₄ = −½ ∂q₁:₃ᵀω`.
pub fn quat_error(q: Quaternion, q_f: Quaternion) -> Quaternion {
    quat_mul(q_f.conj(), q)
}

/// Principal rotation angle `2·acos(|∂q₄|)` in `[0, π]`, evaluated as
/// `2·atan2(‖∂q₁:₃‖, |∂q₄|)` to keep precision for tiny errors.
pub fn principal_angle(dq: Quaternion) -> f64 {
    2.0 * dq.vector().norm().atan2(dq.w.abs())
}

/// `sign` with the convention `sign(0) = +1`.
pub fn sign_nonneg(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_quat() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-1.0..1.0f64)
            .prop_filter("non-degenerate", |a| a.iter().map(|v| v * v).sum::<f64>() > 1e-3)
            .prop_map(|a| Quaternion::from_array(a).normalized())
    }

    fn assert_quat_eq(a: Quaternion, b: Quaternion, tol: f64) {
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert_abs_diff_eq!(*x, y, epsilon = tol);
        }
    }

    #[test]
    fn identity_is_neutral() {
        let q = Quaternion::new(0.1, -0.4, 0.3, 0.5).normalized();
        assert_quat_eq(Quaternion::identity() * q, q, 1e-15);
        assert_quat_eq(q * Quaternion::identity(), q, 1e-15);
    }

    #[test]
    fn product_with_conjugate_is_identity() {
        let q = Quaternion::new(0.7, 0.1, -0.2, 0.3).normalized();
        assert_quat_eq(q * q.conj(), Quaternion::identity(), 1e-15);
    }

    #[test]
    fn two_quarter_turns_about_z_make_a_half_turn() {
        let quarter = Quaternion::from_axis_angle(Vec3::z(), FRAC_PI_2);
        let half = quarter * quarter;
        assert_quat_eq(half, Quaternion::new(0.0, 0.0, 1.0, 0.0), 1e-15);
    }

    #[test]
    fn error_of_equal_attitudes_is_identity() {
        let q = Quaternion::new(0.2, 0.3, -0.1, 0.9).normalized();
        assert_quat_eq(quat_error(q, q), Quaternion::identity(), 1e-15);
    }

    #[test]
    fn error_to_half_turn_about_x() {
        let target = Quaternion::from_axis_angle(Vec3::x(), PI);
        let dq = quat_error(Quaternion::identity(), target);
        assert_abs_diff_eq!(dq.x.abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.z, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.w, 0.0, epsilon = 1e-15);
        // undoing the error from the current attitude lands on the target
        let reached = Quaternion::identity() * dq.conj();
        assert!(reached.rotation_distance(&target) < 1e-15);
    }

    #[test]
    fn error_flips_sign_with_antipodal_attitude() {
        let q = Quaternion::new(0.3, -0.5, 0.2, 0.6).normalized();
        let qf = Quaternion::new(-0.1, 0.4, 0.8, 0.2).normalized();
        assert_quat_eq(quat_error(-q, qf), -quat_error(q, qf), 1e-15);
    }

    #[test]
    fn principal_angle_cases() {
        assert_eq!(principal_angle(Quaternion::identity()), 0.0);
        assert_abs_diff_eq!(principal_angle(Quaternion::new(1.0, 0.0, 0.0, 0.0)), PI, epsilon = 1e-15);
        let five_deg = principal_angle(Quaternion::new(0.0436194, 0.0, 0.0, 0.9990482));
        assert_abs_diff_eq!(five_deg, 5f64.to_radians(), epsilon = 1e-5);
        let tiny = principal_angle(Quaternion::from_axis_angle(Vec3::y(), 1e-9));
        assert!((tiny - 1e-9).abs() <= 1e-22);
    }

    #[test]
    fn rotation_matrix_rotates_body_x_into_world_y_for_quarter_turn() {
        let q = Quaternion::from_axis_angle(Vec3::z(), FRAC_PI_2);
        let v = q.body_to_world() * Vec3::x();
        assert_abs_diff_eq!(v, Vec3::y(), epsilon = 1e-15);
        // agrees with q ⊗ v ⊗ q*
        let u = Vec3::new(0.3, -1.2, 0.5);
        let p = q * Quaternion::pure(u) * q.conj();
        assert_abs_diff_eq!(q.body_to_world() * u, p.vector(), epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn product_norm_is_multiplicative(a in unit_quat(), b in unit_quat(), s in 0.1..3.0f64) {
            let a = a.scale(s);
            let n = (a * b).norm();
            prop_assert!((n - a.norm() * b.norm()).abs() < 1e-12);
        }

        #[test]
        fn product_is_associative(a in unit_quat(), b in unit_quat(), c in unit_quat()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert!((l + (-r)).norm() < 1e-12);
        }

        #[test]
        fn normalization_gives_unit_norm(a in prop::array::uniform4(-10.0..10.0f64)) {
            let q = Quaternion::from_array(a);
            prop_assume!(q.norm() > 1e-6);
            prop_assert!((q.normalized().norm() - 1.0).abs() < 1e-9);
        }
    }
}
