//! Feedback laws and the Lyapunov monitors used to check them.

mod attitude;
mod auv;
mod relpos;

pub use attitude::{
    lyapunov_attitude_torque, lyapunov_value, pd_attitude_torque, smc_attitude_surface, smc_attitude_torque,
};
pub use auv::{
    auv_rotational_surface, auv_rotational_torque, auv_translational_force, auv_translational_surface,
    follower_reference, FormationOffset,
};
pub use relpos::{pd_relpos_force, relpos_surface, smc_relpos_force, RelPosReference};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathcore::Vec3;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be > 0, got {v}")))
    }
}

fn check_positive_vec(name: &str, v: &Vec3) -> Result<()> {
    v.iter().try_for_each(|&c| check_positive(name, c))
}

/// Boundary layers may be zero, which selects the discontinuous sign law.
fn check_layer(name: &str, v: &Vec3) -> Result<()> {
    if v.iter().all(|&c| c >= 0.0 && c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be ≥ 0, got {v:?}")))
    }
}

/// Gains of the large-angle Lyapunov attitude law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovGains {
    pub k1: f64,
    pub k2: f64,
}

impl LyapunovGains {
    pub fn validate(&self) -> Result<()> {
        check_positive("k1", self.k1)?;
        check_positive("k2", self.k2)
    }
}

/// Gains of the sliding-mode attitude law. A zero boundary layer selects the
/// discontinuous sign reaching law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcAttitudeGains {
    pub k_smc: f64,
    /// Diagonal of the reaching gain `Z`, 1/s².
    pub z: Vec3,
    /// Boundary-layer widths, rad/s.
    pub eps: Vec3,
}

impl SmcAttitudeGains {
    /// Scalar triple `[k_smc, Z, ε]` applied on every axis.
    pub fn from_triplet(t: [f64; 3]) -> Self {
        Self { k_smc: t[0], z: Vec3::repeat(t[1]), eps: Vec3::repeat(t[2]) }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("k_smc", self.k_smc)?;
        check_positive_vec("Z", &self.z)?;
        check_layer("eps", &self.eps)
    }
}

/// Gains of the relative-position sliding-mode law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcRelPosGains {
    pub k: f64,
    /// Diagonal of `Z`, m/s².
    pub z: Vec3,
    /// Boundary-layer widths, m/s.
    pub eps: Vec3,
}

impl SmcRelPosGains {
    pub fn validate(&self) -> Result<()> {
        check_positive("k", self.k)?;
        check_positive_vec("Z", &self.z)?;
        check_layer("eps", &self.eps)
    }
}

/// Proportional-derivative baseline gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub p: f64,
    pub d: f64,
}

impl PdGains {
    pub fn validate(&self) -> Result<()> {
        if self.p >= 0.0 && self.d >= 0.0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!("PD gains must be ≥ 0, got ({}, {})", self.p, self.d)))
        }
    }
}

/// Rotational and translational sliding-mode gains of the AUV laws; every
/// matrix gain is diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuvSmcGains {
    pub lambda_w: Vec3,
    pub k_w: Vec3,
    pub b_w: Vec3,
    /// rad/s
    pub eps_w: Vec3,
    pub lambda_v: Vec3,
    pub k_v: Vec3,
    pub b_v: Vec3,
    /// m/s
    pub eps_v: Vec3,
}

impl Default for AuvSmcGains {
    fn default() -> Self {
        Self {
            lambda_w: Vec3::repeat(2.0),
            k_w: Vec3::repeat(0.8),
            b_w: Vec3::repeat(0.2),
            eps_w: Vec3::repeat(0.05),
            lambda_v: Vec3::repeat(1.0),
            k_v: Vec3::repeat(4.0),
            b_v: Vec3::repeat(0.8),
            eps_v: Vec3::repeat(0.05),
        }
    }
}

impl AuvSmcGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_w", &self.lambda_w),
            ("k_w", &self.k_w),
            ("b_w", &self.b_w),
            ("lambda_v", &self.lambda_v),
            ("k_v", &self.k_v),
            ("b_v", &self.b_v),
        ] {
            check_positive_vec(name, v)?;
        }
        check_layer("eps_w", &self.eps_w)?;
        check_layer("eps_v", &self.eps_v)
    }

    /// Same gains with every boundary layer collapsed to the sign law.
    pub fn with_sign_reaching(mut self) -> Self {
        self.eps_w = Vec3::zeros();
        self.eps_v = Vec3::zeros();
        self
    }
}

/// Controller selection with its gains, tagged by `controller` in config
/// files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "controller", rename_all = "snake_case")]
pub enum GainSet {
    Lyapunov(LyapunovGains),
    SmcAtt(SmcAttitudeGains),
    SmcRelpos(SmcRelPosGains),
    Pd(PdGains),
    AuvSmc(AuvSmcGains),
}

impl GainSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            GainSet::Lyapunov(g) => g.validate(),
            GainSet::SmcAtt(g) => g.validate(),
            GainSet::SmcRelpos(g) => g.validate(),
            GainSet::Pd(g) => g.validate(),
            GainSet::AuvSmc(g) => g.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GainSet::Lyapunov(_) => "lyapunov",
            GainSet::SmcAtt(_) => "smc_att",
            GainSet::SmcRelpos(_) => "smc_relpos",
            GainSet::Pd(_) => "pd",
            GainSet::AuvSmc(_) => "auv_smc",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_set_round_trips_through_toml() {
        let sets = [
            GainSet::Lyapunov(LyapunovGains { k1: 0.13, k2: 0.2 }),
            GainSet::SmcAtt(SmcAttitudeGains::from_triplet([2.9947, 0.0193, 0.2601])),
            GainSet::Pd(PdGains { p: 1.0, d: 1.0 }),
            GainSet::AuvSmc(AuvSmcGains::default()),
        ];
        for g in sets {
            let text = toml::to_string(&g).unwrap();
            assert!(text.contains(&format!("controller = \"{}\"", g.name())));
            let back: GainSet = toml::from_str(&text).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn unknown_gain_keys_are_rejected() {
        let text = "controller = \"lyapunov\"\nk1 = 1.0\nk2 = 1.0\nk3 = 2.0\n";
        assert!(toml::from_str::<GainSet>(text).is_err());
    }

    #[test]
    fn validation_catches_non_positive_gains() {
        assert!(LyapunovGains { k1: 0.0, k2: 1.0 }.validate().is_err());
        assert!(SmcAttitudeGains::from_triplet([1.0, -1.0, 0.1]).validate().is_err());
        assert!(SmcAttitudeGains::from_triplet([1.0, 1.0, 0.0]).validate().is_ok());
        assert!(PdGains { p: -1.0, d: 0.0 }.validate().is_err());
        assert!(AuvSmcGains::default().validate().is_ok());
    }
}
