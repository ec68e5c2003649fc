//! Static checks over an automaton definition.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::automaton::{TimedAutomaton, Transition};
use super::guard::{GuardEnv, Operand};

/// Two transitions leaving one state whose guards hold together somewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuardOverlap {
    pub state: String,
    pub first: String,
    pub second: String,
    /// Symbol values (simulation seconds) at which both guards hold.
    pub witness: Vec<(String, f64)>,
    /// Distinct priorities make the step deterministic despite the overlap.
    pub resolved_by_priority: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UndefinedSymbol {
    pub transition: String,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub overlaps: Vec<GuardOverlap>,
    pub unreachable: Vec<String>,
    pub never_reset: Vec<String>,
    pub undefined_symbols: Vec<UndefinedSymbol>,
}

impl ValidationReport {
    pub fn has_overlap(&self, first: &str, second: &str) -> bool {
        self.overlaps
            .iter()
            .any(|o| (o.first == first && o.second == second) || (o.first == second && o.second == first))
    }

    /// No overlap can cause a determinism fault and every symbol resolves.
    pub fn is_deterministic(&self) -> bool {
        self.undefined_symbols.is_empty() && self.overlaps.iter().all(|o| o.resolved_by_priority)
    }
}

/// Runs the static checks: overlapping guard pairs over a boundary grid,
/// unreachable states, timers no transition resets and undefined symbols.
///
/// `input_samples` adds known input values (e.g. scaled catalog durations)
/// to the grid; every guard constant, zero, and half/double of each constant
/// are always included.
pub fn validate(ta: &TimedAutomaton, input_samples: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();

    for tr in &ta.transitions {
        let undefined = tr.guard.symbols().filter_map(|o| match o {
            Operand::Undefined(s) => Some(s.clone()),
            _ => None,
        });
        for symbol in undefined.chain(tr.undefined_resets.iter().cloned()) {
            report.undefined_symbols.push(UndefinedSymbol { transition: tr.label(&ta.states), symbol });
        }
    }

    let grid = sample_grid(ta, input_samples);
    for (a, ta_a) in ta.transitions.iter().enumerate() {
        for ta_b in ta.transitions.iter().skip(a + 1).filter(|t| t.src == ta_a.src) {
            if let Some(witness) = find_overlap(ta, ta_a, ta_b, &grid) {
                report.overlaps.push(GuardOverlap {
                    state: ta.states[ta_a.src].id.clone(),
                    first: ta_a.label(&ta.states),
                    second: ta_b.label(&ta.states),
                    witness,
                    resolved_by_priority: ta_a.priority != ta_b.priority,
                });
            }
        }
    }

    let mut seen = vec![false; ta.states.len()];
    let mut queue = VecDeque::from([ta.initial]);
    seen[ta.initial] = true;
    while let Some(s) = queue.pop_front() {
        for tr in ta.transitions.iter().filter(|t| t.src == s) {
            if !seen[tr.dst] {
                seen[tr.dst] = true;
                queue.push_back(tr.dst);
            }
        }
    }
    report.unreachable = ta.states.iter().zip(&seen).filter(|(_, &r)| !r).map(|(s, _)| s.id.clone()).collect();

    let reset: BTreeSet<usize> = ta.transitions.iter().flat_map(|t| t.resets.iter().copied()).collect();
    report.never_reset = (0..ta.timers.len()).filter(|i| !reset.contains(i)).map(|i| ta.timers[i].clone()).collect();

    report
}

fn sample_grid(ta: &TimedAutomaton, input_samples: &[f64]) -> Vec<f64> {
    let constants: Vec<f64> = ta
        .transitions
        .iter()
        .flat_map(|t| t.guard.constants().map(|c| c * ta.time_scale).collect::<Vec<_>>())
        .collect();
    let mut grid = Vec::new();
    let mut push = |v: f64| {
        if !grid.iter().any(|g: &f64| (g - v).abs() <= 1e-12 * v.abs().max(1.0)) {
            grid.push(v);
        }
    };
    // boundary values first so reported witnesses sit on them
    constants.iter().for_each(|&c| push(c));
    input_samples.iter().for_each(|&u| push(u));
    push(0.0);
    for &c in constants.iter().chain(input_samples) {
        push(0.5 * c);
        push(2.0 * c);
    }
    grid
}

fn find_overlap(ta: &TimedAutomaton, a: &Transition, b: &Transition, grid: &[f64]) -> Option<Vec<(String, f64)>> {
    let mut symbols: Vec<Operand> = Vec::new();
    for o in a.guard.symbols().chain(b.guard.symbols()) {
        if matches!(o, Operand::Undefined(_)) {
            return None;
        }
        if !symbols.contains(o) {
            symbols.push(o.clone());
        }
    }

    let mut inputs = vec![0.0; ta.inputs.len()];
    let mut timers = vec![0.0; ta.timers.len()];
    let mut idx = vec![0usize; symbols.len()];
    loop {
        for (sym, &k) in symbols.iter().zip(&idx) {
            match sym {
                Operand::Input(i) => inputs[*i] = grid[k],
                Operand::Timer(i) => timers[*i] = grid[k],
                _ => {}
            }
        }
        let env = GuardEnv { inputs: &inputs, timers: &timers, time_scale: ta.time_scale };
        if a.guard.holds(&env) == Some(true) && b.guard.holds(&env) == Some(true) {
            let witness = symbols
                .iter()
                .zip(&idx)
                .map(|(sym, &k)| {
                    let name = match sym {
                        Operand::Input(i) => ta.inputs[*i].clone(),
                        Operand::Timer(i) => ta.timers[*i].clone(),
                        _ => unreachable!("constants are filtered out"),
                    };
                    (name, grid[k])
                })
                .collect();
            return Some(witness);
        }
        // odometer over the grid
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return None;
            }
            idx[pos] += 1;
            if idx[pos] < grid.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
