use serde::{Deserialize, Serialize};

use super::guard::{Guard, GuardEnv};
use crate::error::{Error, Result};

/// Human-readable automaton definition, as found in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonSpec {
    pub states: Vec<StateSpec>,
    pub timers: Vec<String>,
    pub inputs: Vec<String>,
    /// Id of the initial state.
    pub initial: String,
    pub transitions: Vec<TransitionSpec>,
    /// Simulation seconds per mission second, applied to guard constants.
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
}

pub fn default_time_scale() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub id: String,
    pub name: String,
    /// Local timer that runs only while this state is active and restarts
    /// from zero on every entry.
    #[serde(default)]
    pub timer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub to: String,
    pub guard: String,
    #[serde(default)]
    pub resets: Vec<String>,
    /// Lower value wins among transitions leaving the same state.
    pub priority: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub id: String,
    pub name: String,
    pub timer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub src: usize,
    pub dst: usize,
    pub guard: Guard,
    /// Timer indices zeroed when the transition fires. Names that do not
    /// resolve are kept in `undefined_resets`.
    pub resets: Vec<usize>,
    pub undefined_resets: Vec<String>,
    pub priority: i32,
}

/// Timed automaton with its current configuration (active state and timer
/// values).
#[derive(Debug, Clone, PartialEq)]
pub struct TimedAutomaton {
    pub states: Vec<State>,
    pub timers: Vec<String>,
    pub inputs: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial: usize,
    pub time_scale: f64,
    pub active: usize,
    pub timer_values: Vec<f64>,
}

/// A fired transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Firing {
    pub transition: usize,
    pub from: usize,
    pub to: usize,
}

impl Transition {
    /// `g(i,j)` label using the numeric suffix of the state ids when present.
    pub fn label(&self, states: &[State]) -> String {
        let short = |i: usize| states[i].id.trim_start_matches('s').to_string();
        format!("g({},{})", short(self.src), short(self.dst))
    }
}

impl TimedAutomaton {
    pub fn from_spec(spec: &AutomatonSpec) -> Result<Self> {
        if !(spec.time_scale > 0.0) {
            return Err(Error::Config(format!("time_scale must be > 0, got {}", spec.time_scale)));
        }
        let state_index = |id: &str| {
            spec.states.iter().position(|s| s.id == id).ok_or_else(|| Error::Config(format!("unknown state id `{id}`")))
        };
        let timer_index = |name: &str| spec.timers.iter().position(|t| t == name);

        let mut states = Vec::with_capacity(spec.states.len());
        for s in &spec.states {
            let timer = match &s.timer {
                Some(t) => Some(
                    timer_index(t)
                        .ok_or_else(|| Error::Config(format!("state `{}` owns unknown timer `{t}`", s.id)))?,
                ),
                None => None,
            };
            states.push(State { id: s.id.clone(), name: s.name.clone(), timer });
        }

        let mut transitions = Vec::with_capacity(spec.transitions.len());
        for t in &spec.transitions {
            let (resets, undefined_resets): (Vec<_>, Vec<_>) = t.resets.iter().partition(|r| timer_index(r).is_some());
            transitions.push(Transition {
                src: state_index(&t.from)?,
                dst: state_index(&t.to)?,
                guard: Guard::parse(&t.guard, &spec.inputs, &spec.timers)?,
                resets: resets.iter().filter_map(|r| timer_index(r)).collect(),
                undefined_resets: undefined_resets.into_iter().cloned().collect(),
                priority: t.priority,
            });
        }

        let initial = state_index(&spec.initial)?;
        Ok(Self {
            states,
            timers: spec.timers.clone(),
            inputs: spec.inputs.clone(),
            transitions,
            initial,
            time_scale: spec.time_scale,
            active: initial,
            timer_values: vec![0.0; spec.timers.len()],
        })
    }

    /// Seven-state mission automaton: commissioning, stabilization,
    /// transient, science, next object, decommissioning, end. Guards and
    /// resets follow the mission tables verbatim; among the transitions
    /// leaving science, decommissioning outranks next-object, which outranks
    /// stabilization.
    pub fn mission(time_scale: f64) -> Self {
        Self::from_spec(&mission_spec(time_scale)).expect("built-in mission automaton is well formed")
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == id)
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|s| s == name)
    }

    pub fn active_state(&self) -> &State {
        &self.states[self.active]
    }

    /// Restores the initial configuration.
    pub fn reset(&mut self) {
        self.active = self.initial;
        self.timer_values.iter_mut().for_each(|t| *t = 0.0);
    }

    /// Moves to `dst` outside the guard table (mission-layer decisions),
    /// restarting the destination's local timer.
    pub fn force(&mut self, dst: usize) {
        self.enter(dst);
    }

    fn enter(&mut self, dst: usize) {
        self.active = dst;
        if let Some(t) = self.states[dst].timer {
            self.timer_values[t] = 0.0;
        }
    }

    /// One supervisor step: the active state's timer advances by `dt`, then
    /// the outgoing guards are evaluated and the highest-priority firing one
    /// (if any) is taken, applying its resets.
    pub fn step(&mut self, dt: f64, inputs: &[f64]) -> Result<Option<Firing>> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("supervisor dt must be > 0, got {dt}")));
        }
        if inputs.len() != self.inputs.len() {
            return Err(Error::Parameter(format!(
                "expected {} supervisor inputs, got {}",
                self.inputs.len(),
                inputs.len()
            )));
        }
        if let Some(t) = self.states[self.active].timer {
            self.timer_values[t] += dt;
        }

        let env = GuardEnv { inputs, timers: &self.timer_values, time_scale: self.time_scale };
        let mut best: Option<usize> = None;
        for (k, tr) in self.transitions.iter().enumerate().filter(|(_, t)| t.src == self.active) {
            let fires = tr
                .guard
                .fires(&env, dt)
                .ok_or_else(|| Error::Config(format!("guard `{}` references an undefined symbol", tr.guard)))?;
            if !fires {
                continue;
            }
            match best {
                None => best = Some(k),
                Some(b) if tr.priority < self.transitions[b].priority => best = Some(k),
                Some(b) if tr.priority == self.transitions[b].priority => {
                    return Err(Error::Determinism {
                        state: self.states[self.active].id.clone(),
                        first: self.transitions[b].label(&self.states),
                        second: tr.label(&self.states),
                    });
                }
                Some(_) => {}
            }
        }

        let Some(k) = best else { return Ok(None) };
        let (from, to) = (self.transitions[k].src, self.transitions[k].dst);
        for &r in &self.transitions[k].resets {
            self.timer_values[r] = 0.0;
        }
        self.enter(to);
        Ok(Some(Firing { transition: k, from, to }))
    }
}

/// Functional form of [`TimedAutomaton::step`].
pub fn ta_step(mut ta: TimedAutomaton, dt: f64, inputs: &[f64]) -> Result<(TimedAutomaton, Option<Firing>)> {
    let fired = ta.step(dt, inputs)?;
    Ok((ta, fired))
}

pub fn mission_spec(time_scale: f64) -> AutomatonSpec {
    let names = ["commissioning", "stabilization", "transient", "science", "next_object", "decommissioning", "end"];
    let states = names
        .iter()
        .enumerate()
        .map(|(i, n)| StateSpec { id: format!("s{i}"), name: n.to_string(), timer: (i < 6).then(|| format!("t{i}")) })
        .collect();
    let tr = |from: usize, to: usize, guard: &str, reset: &str, priority: i32| TransitionSpec {
        from: format!("s{from}"),
        to: format!("s{to}"),
        guard: guard.to_string(),
        resets: if reset.is_empty() { vec![] } else { vec![reset.to_string()] },
        priority,
    };
    AutomatonSpec {
        states,
        timers: (0..6).map(|i| format!("t{i}")).collect(),
        inputs: (1..5).map(|i| format!("u{i}")).collect(),
        initial: "s0".into(),
        transitions: vec![
            tr(0, 4, "u3 < t0", "t0", 0),
            tr(1, 2, "u1 < t1", "t1", 0),
            tr(2, 3, "u2 < t2", "t2", 0),
            tr(3, 4, "u3 >= t3", "t1", 1),
            tr(3, 1, "u3 < t3", "", 2),
            tr(3, 5, "452hr <= t3", "t3", 0),
            tr(4, 2, "u4 < t4", "t1", 0),
            tr(5, 6, "u3 < t5", "t5", 0),
        ],
        time_scale,
    }
}
