use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sa::Bounds;
use crate::error::{Error, Result};

/// `a` is no worse than `b` in both objectives and better in one.
pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub x: Vec<f64>,
    /// `[E, e]` or any other pair to minimize.
    pub objectives: [f64; 2],
}

/// Mutually non-dominated candidates, kept sorted by the first objective.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub entries: Vec<ParetoEntry>,
}

impl ParetoArchive {
    /// Pairwise check that no entry dominates another.
    pub fn is_non_dominated(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries.iter().enumerate().all(|(j, b)| i == j || !dominates(&a.objectives, &b.objectives))
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds finite candidates, drops everything dominated and exact
    /// objective duplicates, then thins the most crowded entries down to
    /// `capacity`.
    pub fn merge(&mut self, candidates: impl IntoIterator<Item = ParetoEntry>, capacity: usize) {
        for c in candidates {
            if !(c.objectives[0].is_finite() && c.objectives[1].is_finite()) {
                continue;
            }
            if self.entries.iter().any(|e| dominates(&e.objectives, &c.objectives) || e.objectives == c.objectives) {
                continue;
            }
            self.entries.retain(|e| !dominates(&c.objectives, &e.objectives));
            self.entries.push(c);
        }
        self.entries.sort_by(|a, b| {
            a.objectives[0].total_cmp(&b.objectives[0]).then(a.objectives[1].total_cmp(&b.objectives[1]))
        });
        while self.entries.len() > capacity.max(2) {
            let objs: Vec<[f64; 2]> = self.entries.iter().map(|e| e.objectives).collect();
            let d = crowding_distance(&objs, &(0..objs.len()).collect::<Vec<_>>());
            let most_crowded = (0..d.len()).fold(0, |m, i| if d[i] < d[m] { i } else { m });
            self.entries.remove(most_crowded);
        }
    }

    /// Entry minimizing `w₀f₀ + w₁f₁`.
    pub fn select(&self, w: [f64; 2]) -> Option<&ParetoEntry> {
        self.entries.iter().min_by(|a, b| {
            let fa = w[0] * a.objectives[0] + w[1] * a.objectives[1];
            let fb = w[0] * b.objectives[0] + w[1] * b.objectives[1];
            fa.total_cmp(&fb)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MogaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    /// Per-variable mutation probability; `None` uses `1 / dim`.
    pub mutation_probability: Option<f64>,
    /// Distribution index of simulated binary crossover.
    pub eta_crossover: f64,
    /// Distribution index of polynomial mutation.
    pub eta_mutation: f64,
    /// Archive size cap; `None` uses the population size.
    pub archive_capacity: Option<usize>,
    pub seed: u64,
}

impl Default for MogaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 50,
            crossover_probability: 0.9,
            mutation_probability: None,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            archive_capacity: None,
            seed: 0,
        }
    }
}

impl MogaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(format!("population must be ≥ 4, got {}", self.population)));
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(self.crossover_probability) || !self.mutation_probability.is_none_or(unit) {
            return Err(Error::Config("crossover and mutation probabilities must lie in [0, 1]".into()));
        }
        if !(self.eta_crossover >= 0.0 && self.eta_mutation >= 0.0) {
            return Err(Error::Config("distribution indices must be ≥ 0".into()));
        }
        if self.archive_capacity == Some(0) {
            return Err(Error::Config("archive capacity must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Individual {
    x: Vec<f64>,
    f: [f64; 2],
    rank: usize,
    crowding: f64,
}

fn evaluate_all<F>(objective: &F, xs: Vec<Vec<f64>>, rejected: &mut usize) -> Vec<Individual>
where
    F: Fn(&[f64]) -> [f64; 2] + Sync,
{
    let fs: Vec<[f64; 2]> = xs.par_iter().map(|x| objective(x)).collect();
    xs.into_iter()
        .zip(fs)
        .map(|(x, f)| {
            let f = if f[0].is_finite() && f[1].is_finite() {
                f
            } else {
                *rejected += 1;
                [f64::INFINITY, f64::INFINITY]
            };
            Individual { x, f, rank: 0, crowding: 0.0 }
        })
        .collect()
}

/// Fronts of indices in order of rank.
fn non_dominated_sort(pop: &[Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&pop[i].f, &pop[j].f) {
                dominated_by[i].push(j);
            } else if i != j && dominates(&pop[j].f, &pop[i].f) {
                count[i] += 1;
            }
        }
    }
    let mut fronts = vec![(0..n).filter(|&i| count[i] == 0).collect::<Vec<_>>()];
    loop {
        let mut next = Vec::new();
        for &i in fronts.last().expect("at least one front") {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        fronts.push(next);
    }
    fronts
}

/// Crowding distance of `members` (indices into `objs`); boundary points
/// get infinity.
fn crowding_distance(objs: &[[f64; 2]], members: &[usize]) -> Vec<f64> {
    let n = members.len();
    let mut d = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objs[members[a]][m].total_cmp(&objs[members[b]][m]));
        let lo = objs[members[order[0]]][m];
        let hi = objs[members[order[n - 1]]][m];
        d[order[0]] = f64::INFINITY;
        d[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if !(span > 0.0) || !span.is_finite() {
            continue;
        }
        for k in 1..n - 1 {
            d[order[k]] += (objs[members[order[k + 1]]][m] - objs[members[order[k - 1]]][m]) / span;
        }
    }
    d
}

fn better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

fn sbx(rng: &mut ChaCha8Rng, a: f64, b: f64, lo: f64, hi: f64, eta: f64) -> (f64, f64) {
    if (a - b).abs() < 1e-14 || hi <= lo {
        return (a, b);
    }
    let u: f64 = rng.random();
    let beta =
        if u <= 0.5 { (2.0 * u).powf(1.0 / (eta + 1.0)) } else { (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0)) };
    let c1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b);
    let c2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b);
    (c1.clamp(lo, hi), c2.clamp(lo, hi))
}

fn polynomial_mutation(rng: &mut ChaCha8Rng, x: f64, lo: f64, hi: f64, eta: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let u: f64 = rng.random();
    let delta =
        if u < 0.5 { (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0 } else { 1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0)) };
    (x + delta * (hi - lo)).clamp(lo, hi)
}

fn assign_rank_and_crowding(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let fronts = non_dominated_sort(pop);
    let objs: Vec<[f64; 2]> = pop.iter().map(|p| p.f).collect();
    for (rank, front) in fronts.iter().enumerate() {
        let d = crowding_distance(&objs, front);
        for (&i, di) in front.iter().zip(d) {
            pop[i].rank = rank;
            pop[i].crowding = di;
        }
    }
    fronts
}

/// NSGA-II over `bounds` minimizing the objective pair. Evaluations of a
/// generation run in parallel and are merged in index order, so results do
/// not depend on the thread count. Returns the archive of every
/// non-dominated finite point seen, thinned by crowding distance.
pub fn moga<F>(objective: F, bounds: &Bounds, cfg: &MogaConfig) -> Result<ParetoArchive>
where
    F: Fn(&[f64]) -> [f64; 2] + Sync,
{
    bounds.validate()?;
    cfg.validate()?;
    let dim = bounds.dim();
    let n = cfg.population;
    let capacity = cfg.archive_capacity.unwrap_or(n);
    let p_mut = cfg.mutation_probability.unwrap_or(1.0 / dim as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rejected = 0;

    let init: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..dim)
                .map(|i| {
                    let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
                    if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();
    let mut pop = evaluate_all(&objective, init, &mut rejected);
    assign_rank_and_crowding(&mut pop);
    let mut archive = ParetoArchive::default();
    archive.merge(pop.iter().map(|p| ParetoEntry { x: p.x.clone(), objectives: p.f }), capacity);

    for _ in 0..cfg.generations {
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let mut pick = || {
                let pair: Vec<&Individual> = pop.choose_multiple(&mut rng, 2).collect();
                if better(pair[1], pair[0]) {
                    pair[1].x.clone()
                } else {
                    pair[0].x.clone()
                }
            };
            let (mut a, mut b) = (pick(), pick());
            if rng.random::<f64>() < cfg.crossover_probability {
                for i in 0..dim {
                    if rng.random::<f64>() < 0.5 {
                        let (c1, c2) = sbx(&mut rng, a[i], b[i], bounds.lower[i], bounds.upper[i], cfg.eta_crossover);
                        a[i] = c1;
                        b[i] = c2;
                    }
                }
            }
            for child in [&mut a, &mut b] {
                for i in 0..dim {
                    if rng.random::<f64>() < p_mut {
                        child[i] =
                            polynomial_mutation(&mut rng, child[i], bounds.lower[i], bounds.upper[i], cfg.eta_mutation);
                    }
                }
            }
            children.push(a);
            if children.len() < n {
                children.push(b);
            }
        }
        let offspring = evaluate_all(&objective, children, &mut rejected);
        archive.merge(offspring.iter().map(|p| ParetoEntry { x: p.x.clone(), objectives: p.f }), capacity);

        pop.extend(offspring);
        let fronts = assign_rank_and_crowding(&mut pop);
        let mut next = Vec::with_capacity(n);
        for front in fronts {
            if next.len() + front.len() <= n {
                next.extend(front);
            } else {
                let mut rest = front;
                rest.sort_by(|&i, &j| pop[j].crowding.total_cmp(&pop[i].crowding).then(i.cmp(&j)));
                next.extend(rest.into_iter().take(n - next.len()));
                break;
            }
        }
        pop = next.into_iter().map(|i| pop[i].clone()).collect();
    }
    if rejected > 0 {
        log::info!("moga rejected {rejected} candidates with non-finite objectives");
    }
    Ok(archive)
}
