//! Timed-automaton mission supervisor: guard evaluation with explicit
//! priorities, timer resets, static validation and mission replay.

mod automaton;
mod catalog;
mod guard;
mod mission;
mod validate;

pub use automaton::{
    mission_spec, ta_step, AutomatonSpec, Firing, State, StateSpec, TimedAutomaton, Transition, TransitionSpec,
};
pub use catalog::{CatalogEntry, MissionCatalog};
pub use guard::{parse_duration, CmpOp, Guard, GuardEnv, Operand};
pub use mission::{
    run_mission, ControllerRole, EventKind, MissionConfig, MissionHooks, NoPlant, Phase, PhaseContext, StateVisit,
    SupervisorTrace, TraceEvent,
};
pub use validate::{validate, GuardOverlap, UndefinedSymbol, ValidationReport};
