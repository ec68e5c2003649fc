//! Classical fixed-step Runge–Kutta integration.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Fixed step, seconds.
    pub dt: f64,
    #[serde(default = "default_true")]
    pub renormalize_quaternion: bool,
}

fn default_true() -> bool {
    true
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Result<Self> {
        let cfg = Self { dt, renormalize_quaternion: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("integrator dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

/// One RK4 step of `ẋ = f(t, x)`.
///
/// `quaternion_offsets` lists the start index of every 4-component quaternion
/// block in the state; those blocks are renormalized after the step when the
/// config asks for it.
pub fn rk4_step<const N: usize, F>(
    mut derivative: F,
    x: &SVector<f64, N>,
    t: f64,
    cfg: &IntegratorConfig,
    quaternion_offsets: &[usize],
) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let h = cfg.dt;
    let mut eval = |tt: f64, xx: &SVector<f64, N>| {
        let k = derivative(tt, xx);
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(Error::IntegrationFault { t: tt })
        }
    };

    let k1 = eval(t, x)?;
    let k2 = eval(t + 0.5 * h, &(x + k1 * (0.5 * h)))?;
    let k3 = eval(t + 0.5 * h, &(x + k2 * (0.5 * h)))?;
    let k4 = eval(t + h, &(x + k3 * h))?;
    let mut next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

    if cfg.renormalize_quaternion {
        for &o in quaternion_offsets {
            let n = next.fixed_rows::<4>(o).norm();
            if n > 0.0 {
                next.fixed_rows_mut::<4>(o).unscale_mut(n);
            }
        }
    }
    Ok(next)
}
