//! Guard expressions of the form `lhs op rhs` over inputs, timers and
//! duration constants, e.g. `u3 < t0` or `452hr <= t3`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Ge,
    Gt,
}

impl CmpOp {
    fn apply(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            CmpOp::Lt => rhs - lhs > tol,
            CmpOp::Le => rhs - lhs >= -tol,
            CmpOp::Ge => lhs - rhs >= -tol,
            CmpOp::Gt => lhs - rhs > tol,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// One side of a comparison, resolved against the automaton's symbol tables.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Input(usize),
    Timer(usize),
    /// Duration in mission seconds, scaled by the automaton's time scale.
    Const(f64),
    Undefined(String),
}

/// Parsed guard with the original text kept for traces and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub text: String,
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

/// Values a guard is evaluated against.
pub struct GuardEnv<'a> {
    pub inputs: &'a [f64],
    pub timers: &'a [f64],
    pub time_scale: f64,
}

impl GuardEnv<'_> {
    fn value(&self, o: &Operand) -> Option<f64> {
        match o {
            Operand::Input(i) => self.inputs.get(*i).copied(),
            Operand::Timer(i) => self.timers.get(*i).copied(),
            Operand::Const(c) => Some(c * self.time_scale),
            Operand::Undefined(_) => None,
        }
    }
}

/// Comparison tolerance relative to the magnitudes involved, so that a timer
/// accumulated from many steps compares equal to the value it should hit.
fn tolerance(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl Guard {
    pub fn parse(text: &str, inputs: &[String], timers: &[String]) -> Result<Self> {
        let ops: [(&str, CmpOp); 6] = [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("≤", CmpOp::Le),
            ("≥", CmpOp::Ge),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        let (pos, sym, op) = ops
            .iter()
            .find_map(|(s, op)| text.find(s).map(|p| (p, *s, *op)))
            .ok_or_else(|| Error::Config(format!("guard `{text}` has no comparison operator")))?;
        let lhs = parse_operand(text[..pos].trim(), inputs, timers)?;
        let rhs = parse_operand(text[pos + sym.len()..].trim(), inputs, timers)?;
        Ok(Self { text: text.trim().to_string(), lhs, op, rhs })
    }

    /// Truth value; `None` when an operand is undefined.
    pub fn holds(&self, env: &GuardEnv) -> Option<bool> {
        let l = env.value(&self.lhs)?;
        let r = env.value(&self.rhs)?;
        Some(self.op.apply(l, r, tolerance(l, r)))
    }

    /// True when growing timers can only turn the guard off, as in
    /// `u3 >= t3`. Such guards act as deadlines.
    pub fn closes_with_time(&self) -> bool {
        let timer_side = |o: &Operand| matches!(o, Operand::Timer(_));
        match self.op {
            CmpOp::Lt | CmpOp::Le => timer_side(&self.lhs) && !timer_side(&self.rhs),
            CmpOp::Ge | CmpOp::Gt => timer_side(&self.rhs) && !timer_side(&self.lhs),
        }
    }

    /// Firing rule for one step: guards that open with time fire as soon as
    /// they hold; guards that close with time fire on the last step at which
    /// they still hold.
    pub fn fires(&self, env: &GuardEnv, dt: f64) -> Option<bool> {
        let now = self.holds(env)?;
        if !now || !self.closes_with_time() {
            return Some(now);
        }
        let later: Vec<f64> = env.timers.iter().map(|t| t + dt).collect();
        let next = GuardEnv { inputs: env.inputs, timers: &later, time_scale: env.time_scale };
        Some(!self.holds(&next)?)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Operand> {
        [&self.lhs, &self.rhs].into_iter().filter(|o| !matches!(o, Operand::Const(_)))
    }

    pub fn constants(&self) -> impl Iterator<Item = f64> + '_ {
        [&self.lhs, &self.rhs].into_iter().filter_map(|o| match o {
            Operand::Const(c) => Some(*c),
            _ => None,
        })
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

fn parse_operand(token: &str, inputs: &[String], timers: &[String]) -> Result<Operand> {
    if token.is_empty() {
        return Err(Error::Config("guard operand is empty".into()));
    }
    if let Some(i) = inputs.iter().position(|s| s == token) {
        return Ok(Operand::Input(i));
    }
    if let Some(i) = timers.iter().position(|s| s == token) {
        return Ok(Operand::Timer(i));
    }
    if token.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        return parse_duration(token).map(Operand::Const);
    }
    Ok(Operand::Undefined(token.to_string()))
}

/// `452hr`, `60 days`, `0.2 h`, `90s`, `5min` → seconds.
pub fn parse_duration(token: &str) -> Result<f64> {
    let split = token
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || c == '-' || c == '+'))
        .unwrap_or(token.len());
    let (num, unit) = token.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| Error::Config(format!("bad duration `{token}`")))?;
    let factor = match unit.trim() {
        "" | "s" | "sec" => 1.0,
        "min" => 60.0,
        "h" | "hr" | "hrs" | "hour" | "hours" => 3600.0,
        "d" | "day" | "days" => 86_400.0,
        other => return Err(Error::Config(format!("unknown duration unit `{other}` in `{token}`"))),
    };
    Ok(value * factor)
}
