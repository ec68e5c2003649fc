use serde::{Deserialize, Serialize};

use super::{PdGains, SmcRelPosGains};
use crate::dynamics::{two_body_acceleration, RelativePair};
use crate::error::Result;
use crate::mathcore::{sat_vec, Vec3};

/// Desired relative state; station-keeping has zero velocity and acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelPosReference {
    pub r: Vec3,
    pub v: Vec3,
    pub a: Vec3,
}

impl RelPosReference {
    pub fn station_keeping(r: Vec3) -> Self {
        Self { r, ..Self::default() }
    }
}

/// `s = (v_rel − v_rel_f) + k (r_rel − r_rel_f)`.
pub fn relpos_surface(pair: &RelativePair, refs: &RelPosReference, k: f64) -> Vec3 {
    (pair.v_rel - refs.v) + (pair.r_rel - refs.r) * k
}

/// Follower acceleration command that makes the relative surface obey
/// `ṡ = −Z sat(s, ε) + (d_L − d_F)`:
///
/// `u_F = μ(r_F/‖r_F‖³ − r_L/‖r_L‖³) + u_L + k(v_rel − v_rel_f) − a_rel_f + Z sat(s, ε)`.
///
/// Feedback terms enter with `+` because follower thrust decreases
/// `r_rel = r_L − r_F`.
pub fn smc_relpos_force(
    pair: &RelativePair,
    refs: &RelPosReference,
    u_l: &Vec3,
    mu: f64,
    g: &SmcRelPosGains,
) -> Result<Vec3> {
    let r_f = pair.leader.r - pair.r_rel;
    let differential_gravity = two_body_acceleration(&pair.leader.r, mu)? - two_body_acceleration(&r_f, mu)?;
    let s = relpos_surface(pair, refs, g.k);
    Ok(differential_gravity + u_l + (pair.v_rel - refs.v) * g.k - refs.a + g.z.component_mul(&sat_vec(&s, &g.eps)))
}

/// PD baseline on the follower's own tracking errors
/// (`err_r = r_F − r_F,desired`): `u = −P err_r − D err_v`, no feed-forward.
pub fn pd_relpos_force(err_r: &Vec3, err_v: &Vec3, g: &PdGains) -> Vec3 {
    -err_r * g.p - err_v * g.d
}
