//! Supervisory formation control toolkit.
//!
//! Rigid-body plants for spacecraft and underwater vehicles, Lyapunov, sliding
//! mode and PD feedback laws, a timed-automaton mission supervisor, Monte-Carlo
//! gain tuning with simulated annealing and NSGA-II, and a small MLP that
//! predicts controller gains together with their expected cost.

// `!(x > 0.0)` is the NaN-rejecting form used by every validator, and index
// loops mirror the per-axis formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod mathcore;
pub mod scenarios;
pub mod supervisor;
pub mod surrogate;
pub mod tuner;

pub use error::{Error, Result};
