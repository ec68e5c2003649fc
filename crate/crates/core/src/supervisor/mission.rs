//! Mission replay: drives the automaton with catalog-derived inputs, binds
//! controllers to phases and records an auditable trace.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::automaton::TimedAutomaton;
use super::catalog::{CatalogEntry, MissionCatalog};
use crate::error::{Error, Result};

/// Controller bound to a mission phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerRole {
    /// No attitude control (commissioning, slews handled elsewhere, end).
    Idle,
    /// Large-angle Lyapunov law.
    Lyapunov,
    /// Sliding-mode law for disturbance rejection.
    SlidingMode,
}

/// Mission phase recognised from the automaton's state names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Commissioning,
    Stabilization,
    Transient,
    Science,
    NextObject,
    Decommissioning,
    End,
    Other,
}

impl Phase {
    pub fn from_name(name: &str) -> Self {
        match name {
            "commissioning" => Phase::Commissioning,
            "stabilization" => Phase::Stabilization,
            "transient" => Phase::Transient,
            "science" => Phase::Science,
            "next_object" => Phase::NextObject,
            "decommissioning" => Phase::Decommissioning,
            "end" => Phase::End,
            _ => Phase::Other,
        }
    }

    /// Lyapunov for fast large-angle alignment, then sliding mode for
    /// disturbance rejection during observations.
    pub fn controller(self) -> ControllerRole {
        match self {
            Phase::Transient | Phase::Stabilization => ControllerRole::Lyapunov,
            Phase::Science => ControllerRole::SlidingMode,
            _ => ControllerRole::Idle,
        }
    }
}

/// Per-run supervisor inputs that do not come from the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionConfig {
    /// Supervisor step, s. Must not exceed the shortest scaled duration.
    pub dt: f64,
    /// `u1`: stabilization time, s.
    pub stabilization_time: f64,
    /// `u4`: time to reach the science phase after selecting a target, s.
    pub time_to_science: f64,
    /// Lower/upper bounds of the transient duration `T`, s.
    pub transient_bounds: (f64, f64),
    /// Accept `T` outside `transient_bounds`.
    pub allow_transient_override: bool,
    /// Simulation time after which the run is cut with a fault event, s.
    pub max_time: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            stabilization_time: 5.0,
            time_to_science: 1.0,
            transient_bounds: (7.2, 72.0),
            allow_transient_override: false,
            max_time: 1e5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Transition,
    /// Mission-layer move outside the guard table.
    Forced,
    /// Run stopped; `from == to`.
    Fault,
}

/// One line of the supervisor trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub time: f64,
    pub kind: EventKind,
    pub from: String,
    pub to: String,
    /// Guard label and text, or the reason for forced/fault events.
    pub guard: String,
    pub timers: Vec<f64>,
    /// Target in effect after the event.
    pub object: Option<String>,
}

/// Time spent in one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVisit {
    pub state: String,
    pub enter: f64,
    pub exit: f64,
    pub object: Option<String>,
}

impl StateVisit {
    pub fn duration(&self) -> f64 {
        self.exit - self.enter
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisorTrace {
    pub initial: String,
    pub events: Vec<TraceEvent>,
    pub end_time: f64,
    /// Reached a state without outgoing transitions.
    pub completed: bool,
}

impl SupervisorTrace {
    /// Every event starts where the previous one ended.
    pub fn is_chained(&self) -> bool {
        let mut at = self.initial.as_str();
        for e in &self.events {
            if e.from != at {
                return false;
            }
            at = &e.to;
        }
        true
    }

    pub fn fault(&self) -> Option<&TraceEvent> {
        self.events.iter().find(|e| e.kind == EventKind::Fault)
    }

    /// State visits in order, with the target that was active during each.
    pub fn visits(&self) -> Vec<StateVisit> {
        let mut visits = Vec::with_capacity(self.events.len() + 1);
        let mut current = StateVisit { state: self.initial.clone(), enter: 0.0, exit: self.end_time, object: None };
        for e in self.events.iter().filter(|e| e.kind != EventKind::Fault) {
            current.exit = e.time;
            let next = StateVisit { state: e.to.clone(), enter: e.time, exit: self.end_time, object: e.object.clone() };
            visits.push(std::mem::replace(&mut current, next));
        }
        visits.push(current);
        visits
    }

    pub fn visits_of(&self, state_name: &str) -> Vec<StateVisit> {
        self.visits().into_iter().filter(|v| v.state == state_name).collect()
    }

    /// One JSON object per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.push(b'\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// `state,object,enter_time,exit_time,duration`.
    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let io = |e| Error::io(path, e);
        writeln!(out, "state,object,enter_time,exit_time,duration").map_err(io)?;
        for v in self.visits() {
            writeln!(
                out,
                "{},{},{:?},{:?},{:?}",
                v.state,
                v.object.as_deref().unwrap_or(""),
                v.enter,
                v.exit,
                v.duration()
            )
            .map_err(io)?;
        }
        std::fs::write(path, out).map_err(io)
    }
}

/// What the supervisor tells the simulation about the current phase.
#[derive(Debug, Clone, Copy)]
pub struct PhaseContext<'a> {
    pub phase: Phase,
    pub controller: ControllerRole,
    pub object: Option<&'a CatalogEntry>,
    pub time: f64,
}

/// Closed-loop simulation attached to a mission replay.
pub trait MissionHooks {
    /// Transient duration `T` for the upcoming transient phase.
    fn transient_duration(&mut self, default_t: f64, _object: Option<&CatalogEntry>) -> Result<f64> {
        Ok(default_t)
    }

    fn on_enter(&mut self, _ctx: &PhaseContext) -> Result<()> {
        Ok(())
    }

    /// Advances the plant by `dt` under the phase's controller. An
    /// [`Error::IntegrationFault`] ends the run with a fault event.
    fn advance(&mut self, _ctx: &PhaseContext, _dt: f64) -> Result<()> {
        Ok(())
    }
}

/// Supervisor-only replay with no plant attached.
pub struct NoPlant;

impl MissionHooks for NoPlant {}

/// Replays the mission: commissioning, then for each catalog target a
/// slew/transient/science cycle, then decommissioning.
///
/// Inputs per step: `u1` stabilization time, `u2 = T`, `u3` the scaled
/// duration of the current mode (commissioning, target, or
/// decommissioning), `u4` time to science. Entering next-object with the
/// catalog exhausted forces decommissioning.
pub fn run_mission(
    ta: &mut TimedAutomaton,
    catalog: &MissionCatalog,
    transient_t: f64,
    cfg: &MissionConfig,
    hooks: &mut dyn MissionHooks,
) -> Result<SupervisorTrace> {
    catalog.validate()?;
    if !(cfg.dt > 0.0) {
        return Err(Error::Parameter(format!("mission dt must be > 0, got {}", cfg.dt)));
    }
    let shortest = catalog.entries.iter().map(|e| catalog.scaled(e)).fold(f64::INFINITY, f64::min);
    if cfg.dt > shortest {
        return Err(Error::Parameter(format!("mission dt {} exceeds the shortest scaled duration {shortest}", cfg.dt)));
    }
    let check_t = |t: f64| -> Result<f64> {
        let (lo, hi) = cfg.transient_bounds;
        if t.is_finite() && t >= 0.0 && (cfg.allow_transient_override || (lo..=hi).contains(&t)) {
            Ok(t)
        } else {
            Err(Error::Parameter(format!("transient duration {t} s outside [{lo}, {hi}]")))
        }
    };
    check_t(transient_t)?;

    let input =
        |name: &str| ta.input_index(name).ok_or_else(|| Error::Config(format!("automaton has no input `{name}`")));
    let (i_u1, i_u2, i_u3, i_u4) = (input("u1")?, input("u2")?, input("u3")?, input("u4")?);
    let decommissioning = ta
        .states
        .iter()
        .position(|s| Phase::from_name(&s.name) == Phase::Decommissioning)
        .ok_or_else(|| Error::Config("automaton has no decommissioning state".into()))?;

    ta.reset();
    let mut trace =
        SupervisorTrace { initial: ta.active_state().id.clone(), events: Vec::new(), end_time: 0.0, completed: false };
    let mut inputs = vec![0.0; ta.inputs.len()];
    inputs[i_u1] = cfg.stabilization_time;
    inputs[i_u4] = cfg.time_to_science;
    inputs[i_u2] = transient_t;

    let mut next_target = 0usize;
    let mut object: Option<&CatalogEntry> = None;
    let mut step: u64 = 0;
    let mut time = 0.0;

    let phase_of = |ta: &TimedAutomaton| Phase::from_name(&ta.active_state().name);
    hooks.on_enter(&context(phase_of(ta), object, time))?;

    loop {
        let phase = phase_of(ta);
        if !ta.transitions.iter().any(|t| t.src == ta.active) {
            trace.completed = true;
            break;
        }
        if time >= cfg.max_time {
            trace.events.push(fault_event(ta, step, time, "time limit reached", object));
            break;
        }
        inputs[i_u3] = match phase {
            Phase::Commissioning => catalog.scaled(catalog.commissioning()),
            Phase::Decommissioning | Phase::End => catalog.scaled(catalog.decommissioning()),
            _ => object.map(|o| catalog.scaled(o)).unwrap_or(0.0),
        };

        let ctx = context(phase, object, time);
        match hooks.advance(&ctx, cfg.dt) {
            Ok(()) => {}
            Err(e @ Error::IntegrationFault { .. }) => {
                trace.events.push(fault_event(ta, step, time, &e.to_string(), object));
                break;
            }
            Err(e) => return Err(e),
        }

        step += 1;
        time = step as f64 * cfg.dt;
        let fired = match ta.step(cfg.dt, &inputs) {
            Ok(f) => f,
            Err(e) => {
                log::error!("supervisor aborted: {e}; trace so far: {}", serde_json::to_string(&trace.events)?);
                return Err(e);
            }
        };
        let Some(f) = fired else { continue };

        let tr = &ta.transitions[f.transition];
        let guard = format!("{}: {}", tr.label(&ta.states), tr.guard);
        let mut to_phase = phase_of(ta);
        if to_phase == Phase::NextObject {
            object = catalog.targets().get(next_target);
            next_target += 1;
        }
        trace.events.push(TraceEvent {
            step,
            time,
            kind: EventKind::Transition,
            from: ta.states[f.from].id.clone(),
            to: ta.states[f.to].id.clone(),
            guard,
            timers: ta.timer_values.clone(),
            object: object.map(|o| o.name.clone()),
        });

        if to_phase == Phase::NextObject && object.is_none() {
            let from = ta.active_state().id.clone();
            ta.force(decommissioning);
            to_phase = Phase::Decommissioning;
            trace.events.push(TraceEvent {
                step,
                time,
                kind: EventKind::Forced,
                from,
                to: ta.active_state().id.clone(),
                guard: "catalog exhausted".into(),
                timers: ta.timer_values.clone(),
                object: None,
            });
        }
        if to_phase == Phase::Transient {
            inputs[i_u2] = check_t(hooks.transient_duration(transient_t, object)?)?;
        }
        hooks.on_enter(&context(to_phase, object, time))?;
    }
    trace.end_time = time;
    Ok(trace)
}

fn context(phase: Phase, object: Option<&CatalogEntry>, time: f64) -> PhaseContext<'_> {
    PhaseContext { phase, controller: phase.controller(), object, time }
}

fn fault_event(ta: &TimedAutomaton, step: u64, time: f64, reason: &str, object: Option<&CatalogEntry>) -> TraceEvent {
    let here = ta.active_state().id.clone();
    TraceEvent {
        step,
        time,
        kind: EventKind::Fault,
        from: here.clone(),
        to: here,
        guard: reason.to_string(),
        timers: ta.timer_values.clone(),
        object: object.map(|o| o.name.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(trace: &SupervisorTrace, ta: &TimedAutomaton) -> Vec<String> {
        let name = |id: &str| ta.states[ta.state_index(id).unwrap()].name.clone();
        std::iter::once(name(&trace.initial)).chain(trace.events.iter().map(|e| name(&e.to))).collect()
    }

    #[test]
    fn single_target_mission_runs_in_order() {
        let mut ta = TimedAutomaton::mission(1e-5);
        let catalog = MissionCatalog::with_targets(1e-5, &[1]);
        let cfg = MissionConfig::default();
        let trace = run_mission(&mut ta, &catalog, 10.0, &cfg, &mut NoPlant).unwrap();
        assert!(trace.completed && trace.is_chained());
        assert_eq!(
            names(&trace, &ta),
            ["commissioning", "next_object", "transient", "science", "next_object", "decommissioning", "end"]
        );
        assert_eq!(trace.events[4].kind, EventKind::Forced);
        let first = &trace.events[0];
        assert!((first.time - 51.84).abs() <= cfg.dt);
    }

    #[test]
    fn full_catalog_has_eight_science_episodes() {
        let mut ta = TimedAutomaton::mission(1e-5);
        let catalog = MissionCatalog::standard(1e-5);
        let cfg = MissionConfig::default();
        let trace = run_mission(&mut ta, &catalog, 7.2, &cfg, &mut NoPlant).unwrap();
        assert!(trace.completed);
        let science = trace.visits_of("s3");
        assert_eq!(science.len(), 8);
        for (v, target) in science.iter().zip(catalog.targets()) {
            assert_eq!(v.object.as_deref(), Some(target.name.as_str()));
            assert!((v.duration() - catalog.scaled(target)).abs() <= cfg.dt + 1e-9);
        }
        // the last observation leaves straight for decommissioning
        let last = trace.events.iter().rev().find(|e| e.from == "s3").unwrap();
        assert_eq!(last.to, "s5");
        assert_eq!(last.kind, EventKind::Transition);
    }

    #[test]
    fn zero_transient_exits_on_first_step() {
        let mut ta = TimedAutomaton::mission(1e-5);
        let catalog = MissionCatalog::with_targets(1e-5, &[1]);
        let cfg = MissionConfig { allow_transient_override: true, ..MissionConfig::default() };
        let trace = run_mission(&mut ta, &catalog, 0.0, &cfg, &mut NoPlant).unwrap();
        let transient = &trace.visits_of("s2")[0];
        assert!((transient.duration() - cfg.dt).abs() < 1e-9);
        let strict = MissionConfig::default();
        assert!(run_mission(&mut ta, &catalog, 0.0, &strict, &mut NoPlant).is_err());
    }

    #[test]
    fn replay_is_deterministic() {
        let catalog = MissionCatalog::standard(1e-5);
        let run = || {
            let mut ta = TimedAutomaton::mission(1e-5);
            run_mission(&mut ta, &catalog, 12.5, &MissionConfig::default(), &mut NoPlant).unwrap()
        };
        assert_eq!(run(), run());
    }

    struct Diverges;

    impl MissionHooks for Diverges {
        fn advance(&mut self, ctx: &PhaseContext, _dt: f64) -> Result<()> {
            if ctx.phase == Phase::Transient {
                Err(Error::IntegrationFault { t: ctx.time })
            } else {
                Ok(())
            }
        }
    }

    #[test]
    fn divergence_truncates_with_fault_event() {
        let mut ta = TimedAutomaton::mission(1e-5);
        let trace =
            run_mission(&mut ta, &MissionCatalog::standard(1e-5), 10.0, &MissionConfig::default(), &mut Diverges)
                .unwrap();
        assert!(!trace.completed);
        let fault = trace.fault().unwrap();
        assert_eq!((fault.from.as_str(), fault.to.as_str()), ("s2", "s2"));
        assert!(trace.is_chained());
    }

    #[test]
    fn trace_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut ta = TimedAutomaton::mission(1e-5);
        let trace = run_mission(
            &mut ta,
            &MissionCatalog::with_targets(1e-5, &[1, 2]),
            8.0,
            &MissionConfig::default(),
            &mut NoPlant,
        )
        .unwrap();
        let jsonl = dir.path().join("trace.jsonl");
        let csv = dir.path().join("summary.csv");
        trace.write_jsonl(&jsonl).unwrap();
        trace.write_summary_csv(&csv).unwrap();
        let lines = std::fs::read_to_string(&jsonl).unwrap();
        assert_eq!(lines.lines().count(), trace.events.len());
        for l in lines.lines() {
            serde_json::from_str::<TraceEvent>(l).unwrap();
        }
        let summary = std::fs::read_to_string(&csv).unwrap();
        assert!(summary.starts_with("state,object,enter_time,exit_time,duration\n"));
        assert_eq!(summary.lines().count(), trace.visits().len() + 1);
    }
}
