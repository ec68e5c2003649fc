//! Subcommand bodies. Each one writes its outputs, the plot bundle and the
//! manifest into a run directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;
use supctl_core::scenarios::{
    run_auv_formation, run_relpos_formation, run_science_attitude_comparison, run_science_campaign,
    run_supervised_mission, run_transient_campaign, CampaignResult, RelPosController, RunReport,
};
use supctl_core::supervisor::TimedAutomaton;
use supctl_core::surrogate::{write_loss_history, SurrogateModel};
use supctl_core::tuner::{
    export_dataset, sample_campaign, science_front, Dataset, ScenarioDistributions, ScenarioSample, ScienceLaw,
    FEATURE_DIM, SCIENCE_SMC_TARGETS, TRANSIENT_TARGETS,
};

use crate::config::{CliConfig, ConfigError, TuneMode};
use crate::manifest::{config_hash, relative, Manifest};
use crate::plots::{emit_plot_data, mark_dominated, ParetoPoint, ParetoPoints, PARETO_FILE};

/// Where and how a command runs.
pub struct Run {
    pub config: CliConfig,
    pub dir: PathBuf,
    pub jobs: Option<usize>,
}

impl Run {
    fn seed(&self) -> u64 {
        self.config.global.seed
    }

    fn manifest(&self, command: &str) -> Result<Manifest> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let mut m = Manifest::new(command, &self.config)?;
        m.seed("seed", self.seed());
        Ok(m)
    }

    fn json(&self, m: &mut Manifest, file: &str, value: &impl serde::Serialize) -> Result<()> {
        let path = self.dir.join(file);
        std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        m.output(file);
        Ok(())
    }

    /// Emits the plot bundle and writes the manifest.
    fn finish(&self, mut m: Manifest) -> Result<()> {
        let bundle = emit_plot_data(&self.dir, Some(&m.command))?;
        bundle.written.into_iter().for_each(|f| m.output(f));
        m.write(&self.dir)?;
        log::info!("run written to {}", self.dir.display());
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SimTarget {
    /// Sliding mode vs PD on the science-pointing scenario.
    Science,
    /// Sliding mode vs PD relative-position hold in orbit.
    Relpos,
}

pub fn simulate(run: &Run, target: SimTarget) -> Result<()> {
    let cfg = &run.config.simulate;
    let seed = run.seed();
    match target {
        SimTarget::Science => {
            let mut m = run.manifest("simulate-science")?;
            let c = run_science_attitude_comparison(&cfg.science, &cfg.smc_gains, &cfg.pd_gains, &cfg.weights, seed)?;
            m.report(&run.dir, &c.smc)?;
            m.report(&run.dir, &c.pd)?;
            m.results = json!({
                "smc_cost": c.smc_cost,
                "pd_cost": c.pd_cost,
                "smc_objective": c.smc_objective,
                "pd_objective": c.pd_objective,
                "error_ratio": c.smc_cost.error_deg / c.pd_cost.error_deg,
                "energy_ratio": c.smc_cost.energy / c.pd_cost.energy,
            });
            println!(
                "smc: e = {:.6} deg, E = {:.6e} J | pd: e = {:.6} deg, E = {:.6e} J",
                c.smc_cost.error_deg, c.smc_cost.energy, c.pd_cost.error_deg, c.pd_cost.energy
            );
            run.finish(m)
        }
        SimTarget::Relpos => {
            let mut m = run.manifest("simulate-relpos")?;
            let smc = run_relpos_formation(&cfg.relpos, RelPosController::Smc, seed)?;
            let pd = run_relpos_formation(&cfg.relpos, RelPosController::Pd, seed)?;
            m.report(&run.dir, &smc)?;
            m.report(&run.dir, &pd)?;
            let km = |r: &RunReport| r.metrics.steady_state_error / 1e3;
            m.results = json!({
                "steady_state_error_km": {"smc": km(&smc), "pd": km(&pd)},
                "diverged": {"smc": smc.diverged, "pd": pd.diverged},
            });
            println!("steady-state error: smc {:.3e} km, pd {:.3e} km", km(&smc), km(&pd));
            run.finish(m)
        }
    }
}

fn campaign_points(res: &CampaignResult, gain_names: &[&str]) -> ParetoPoints {
    let mut points: Vec<ParetoPoint> = res
        .plans
        .iter()
        .enumerate()
        .filter(|(i, _)| !res.summary.excluded.contains(i))
        .map(|(_, p)| ParetoPoint {
            energy: p.cost.energy,
            error_deg: p.cost.error_deg,
            gains: p.decision.clone(),
            dominated: false,
        })
        .collect();
    mark_dominated(&mut points);
    ParetoPoints { gain_names: gain_names.iter().map(|s| s.to_string()).collect(), points }
}

fn write_campaign(run: &Run, m: &mut Manifest, res: &CampaignResult, targets: Option<&[&str]>) -> Result<()> {
    run.json(m, "campaign_summary.json", &res.summary)?;
    run.json(m, "campaign_plans.json", &res.plans)?;
    let names: Vec<&str> = match targets {
        Some(t) => t[2..].to_vec(),
        None => (0..res.summary.decision.len()).map(|_| "gain").collect(),
    };
    run.json(m, PARETO_FILE, &campaign_points(res, &names))?;
    if let Some(t) = targets {
        let split = run.config.tune.split_ratio;
        let dir = run.dir.join("dataset");
        let ds = export_dataset(&res.rows, t, split, run.seed(), &dir)?;
        for f in ["train.csv", "heldout.csv", "normalization.json"] {
            m.output(relative(&run.dir, &dir.join(f)));
        }
        m.seed("split", run.seed());
        log::info!("dataset: {} training and {} held-out rows", ds.train.len(), ds.heldout.len());
    } else {
        log::info!("no surrogate dataset for this law; only sliding-mode science gains are learned");
    }
    let s = &res.summary;
    println!(
        "tuned {}/{} (excluded {:?}); P{} E = {:.4} J, P{} e = {:.5} deg",
        s.tuned, s.requested, s.excluded, s.percentile, s.energy.upper, s.percentile, s.error_deg.upper
    );
    m.results["summary"] = json!(s);
    Ok(())
}

pub fn tune(run: &Run, mode: Option<TuneMode>, smoke: bool) -> Result<()> {
    let tc = &run.config.tune;
    let mode = mode.unwrap_or(tc.mode);
    let seed = run.seed();
    let mut m = run.manifest("tune")?;
    m.results = json!({ "mode": mode, "budget_smoke": smoke });
    match mode {
        TuneMode::Transient => {
            let mut c = tc.transient.clone();
            if smoke {
                c.scenarios = tc.smoke_scenarios;
                c.allow_small = true;
                c.sa.iterations = c.sa.iterations.min(tc.smoke_iterations);
            }
            m.seed("sa_base", c.sa.seed);
            let res = run_transient_campaign(&c, seed, run.jobs)?;
            write_campaign(run, &mut m, &res, Some(&TRANSIENT_TARGETS))?;
        }
        TuneMode::Science => {
            let mut c = tc.science.clone();
            if smoke {
                c.scenarios = tc.smoke_scenarios;
                c.allow_small = true;
                c.sa.iterations = c.sa.iterations.min(tc.smoke_iterations);
            }
            m.seed("sa_base", c.sa.seed);
            if let Some(d) = c.disturbance_seed {
                m.seed("disturbance", d);
            }
            let res = run_science_campaign(&c, seed, run.jobs)?;
            let targets = (c.law == ScienceLaw::Smc).then_some(&SCIENCE_SMC_TARGETS[..]);
            write_campaign(run, &mut m, &res, targets)?;
        }
        TuneMode::Moga => {
            let mc = &tc.moga;
            let mut moga = mc.config.clone();
            if smoke {
                moga.population = moga.population.min(16);
                moga.generations = moga.generations.min(5);
            }
            m.seed("moga", moga.seed);
            let s = &mc.scenario;
            let scenario = ScenarioSample { x0: s.x0(), xf: s.xf(), w: mc.weights, seed };
            let archive = science_front(&scenario, mc.law, &mc.law.bounds(), s.duration, &s.plant, &moga)?;
            let gain_names: &[&str] = match mc.law {
                ScienceLaw::Smc => &SCIENCE_SMC_TARGETS[2..],
                ScienceLaw::Pd => &["p", "d"],
            };
            let mut points: Vec<ParetoPoint> = archive
                .entries
                .iter()
                .map(|e| ParetoPoint {
                    energy: e.objectives[0],
                    error_deg: e.objectives[1],
                    gains: e.x.clone(),
                    dominated: false,
                })
                .collect();
            mark_dominated(&mut points);
            let pareto = ParetoPoints { gain_names: gain_names.iter().map(|s| s.to_string()).collect(), points };
            run.json(&mut m, PARETO_FILE, &pareto)?;
            let chosen = archive.select([mc.weights.x, mc.weights.y]);
            println!("archive of {} non-dominated gain sets", archive.len());
            m.results = json!({
                "mode": mode,
                "budget_smoke": smoke,
                "archive_size": archive.len(),
                "non_dominated": archive.is_non_dominated(),
                "selected": chosen,
            });
        }
    }
    run.finish(m)
}

pub fn train(run: &Run, data: &Path) -> Result<()> {
    let tc = &run.config.train;
    let mut m = run.manifest("train")?;
    m.inputs.insert("dataset".into(), data.display().to_string());
    let ds = Dataset::load(data).with_context(|| format!("loading dataset from {}", data.display()))?;
    let init = tc.init_seed.unwrap_or(run.seed());
    m.seed("init", init);
    m.seed("shuffle", tc.optimizer.seed);
    let mut model = SurrogateModel::new(&ds, &tc.hidden, init)?;
    let history = model.train(&ds, &tc.optimizer)?;
    model.save(&run.dir.join("model.json"))?;
    write_loss_history(&history, &run.dir.join("loss.csv"))?;
    m.output("model.json");
    m.output("loss.csv");
    let heldout = model.evaluate_mse(&ds.heldout)?;
    let last = history.last().copied().unwrap_or(f64::NAN);
    println!("final training loss {last:.5}, held-out MSE {heldout:.5} (normalized targets)");
    m.results = json!({
        "target_names": ds.target_names,
        "train_rows": ds.train.len(),
        "heldout_rows": ds.heldout.len(),
        "final_train_loss": last,
        "heldout_mse": heldout,
    });
    run.finish(m)
}

fn parse_features(text: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| ConfigError(format!("--features: {e}")))?;
    if v.len() != FEATURE_DIM {
        bail!(ConfigError(format!("--features: expected {FEATURE_DIM} values, got {}", v.len())));
    }
    Ok(v)
}

pub fn predict(run: &Run, model_path: &Path, features: Option<&str>) -> Result<()> {
    let mut m = run.manifest("predict")?;
    m.inputs.insert("model".into(), model_path.display().to_string());
    let model = SurrogateModel::load(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let x = match features {
        Some(t) => parse_features(t)?,
        None => {
            let dists = if model.target_names.iter().any(|n| n == "T") {
                ScenarioDistributions::default()
            } else {
                ScenarioDistributions::science()
            };
            sample_campaign(&dists, 1, run.seed())?[0].features().to_vec()
        }
    };
    let plan = model.predict_plan(&x)?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    println!("[{}] = [{}]", plan.target_names.join(", "), fmt(&plan.values));
    if plan.explanation.clamps.is_empty() {
        println!("clamps: none");
    }
    for c in &plan.explanation.clamps {
        println!("clamp: {c}");
    }
    println!("in distribution: {} (max |z| = {:.3})", plan.explanation.in_distribution, plan.explanation.max_abs_z);
    m.results = json!({ "features": x, "plan": plan });
    run.json(&mut m, "prediction.json", &json!({ "features": x, "plan": plan }))?;
    run.finish(m)
}

pub fn mission(run: &Run, model: Option<&Path>, science: Option<&Path>) -> Result<()> {
    let Some(model_path) = model else {
        bail!(ConfigError("mission needs --model <transient surrogate>".into()));
    };
    let mut m = run.manifest("mission")?;
    m.inputs.insert("transient_model".into(), model_path.display().to_string());
    let transient = SurrogateModel::load(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let science = match science {
        Some(p) => {
            m.inputs.insert("science_model".into(), p.display().to_string());
            Some(SurrogateModel::load(p).with_context(|| format!("loading {}", p.display()))?)
        }
        None => None,
    };
    let r = run_supervised_mission(Some(&transient), science.as_ref(), &run.config.mission, run.seed())?;
    r.trace.write_jsonl(&run.dir.join("trace.jsonl"))?;
    r.trace.write_summary_csv(&run.dir.join("trace_summary.csv"))?;
    m.output("trace.jsonl");
    m.output("trace_summary.csv");

    let mut table = String::from(
        "index,phase,object,start,gains,predicted_E,predicted_e_deg,realized_E,realized_e_deg,clamps,in_distribution\n",
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, p) in r.phases.iter().enumerate() {
        m.report(&run.dir, &p.report)?;
        let gains: Vec<String> = p.gains.iter().map(f64::to_string).collect();
        table.push_str(&format!(
            "{i},{},{},{},{},{},{},{},{},{},{}\n",
            serde_json::to_value(p.phase)?.as_str().unwrap_or_default(),
            p.object.as_deref().unwrap_or(""),
            p.start,
            gains.join(";"),
            opt(p.predicted.map(|x| x[0])),
            opt(p.predicted.map(|x| x[1])),
            p.realized[0],
            p.realized[1],
            p.clamps.join(";"),
            p.in_distribution.map(|b| b.to_string()).unwrap_or_default(),
        ));
    }
    std::fs::write(run.dir.join("phases.csv"), table).context("writing phases.csv")?;
    m.output("phases.csv");
    let ta = TimedAutomaton::mission(run.config.mission.catalog.time_scale);
    let science_id = ta.states.iter().find(|s| s.name == "science").map(|s| s.id.clone()).unwrap_or_default();
    let science_objects: Vec<_> = r.trace.visits_of(&science_id).into_iter().map(|v| v.object).collect();
    println!(
        "mission {} at t = {:.3} s; {} science episodes",
        if r.trace.completed { "completed" } else { "stopped" },
        r.trace.end_time,
        science_objects.len()
    );
    m.results = json!({
        "completed": r.trace.completed,
        "end_time": r.trace.end_time,
        "fault": r.trace.fault(),
        "science_episodes": science_objects,
    });
    run.finish(m)
}

pub fn auv(run: &Run) -> Result<()> {
    let cfg = &run.config.auv;
    let seed = run.seed();
    let mut m = run.manifest("auv")?;
    let r = run_auv_formation(&cfg.scenario, seed)?;
    m.report(&run.dir, &r.leader)?;
    m.report(&run.dir, &r.follower)?;
    let mut results = json!({
        "follower_steady_state_error": r.follower.metrics.steady_state_error,
        "leader_steady_state_error": r.leader.metrics.steady_state_error,
        "max_quaternion_norm_drift": r.max_quaternion_norm_drift,
        "follower_sign_flip_rate": r.follower.metrics.sign_flip_rate,
    });
    println!(
        "follower steady-state offset error {:.4} m, quaternion drift {:.1e}",
        r.follower.metrics.steady_state_error, r.max_quaternion_norm_drift
    );
    if cfg.compare_sign {
        let sign =
            supctl_core::scenarios::AuvScenario { gains: cfg.scenario.gains.with_sign_reaching(), ..cfg.scenario };
        let s = run_auv_formation(&sign, seed)?;
        for (mut rep, name) in [(s.leader, "auv_sign_leader"), (s.follower, "auv_sign_follower")] {
            rep.name = name.into();
            m.report(&run.dir, &rep)?;
        }
        let sign_rate = m.summary["auv_sign_follower"].sign_flip_rate;
        let ratio = sign_rate / r.follower.metrics.sign_flip_rate;
        results["sign_follower_sign_flip_rate"] = json!(sign_rate);
        results["flip_rate_ratio"] = json!(ratio);
        println!("sign-function variant flips {ratio:.1}x as often");
    }
    m.results = results;
    run.finish(m)
}

/// Recomputes every report's metrics from its series and compares them
/// bit for bit with the manifest and the report file.
pub fn report(dir: &Path) -> Result<()> {
    let manifest = Manifest::load(dir)?;
    if config_hash(&manifest.config)? != manifest.config_hash {
        bail!("{}: config hash does not match the recorded config", dir.display());
    }
    let mut mismatches = Vec::new();
    for (name, recorded) in &manifest.summary {
        let rep = match RunReport::load(&RunReport::report_path(dir, name)) {
            Ok(r) => r,
            Err(e) => {
                println!("{name:<24} MISSING  {e}");
                mismatches.push(name.clone());
                continue;
            }
        };
        let again = rep.recompute()?;
        let ok = again == *recorded && again == rep.metrics;
        println!(
            "{name:<24} {} energy {:e} terminal {:e} steady {:e} flips/s {}",
            if ok { "ok      " } else { "MISMATCH" },
            again.energy,
            again.terminal_error,
            again.steady_state_error,
            again.sign_flip_rate
        );
        if !ok {
            mismatches.push(name.clone());
        }
    }
    let bundle = emit_plot_data(dir, Some(&manifest.command))?;
    for f in &bundle.written {
        log::info!("plot data: {f}");
    }
    for f in &bundle.missing {
        println!("missing: {f}");
    }
    if !mismatches.is_empty() {
        bail!("reports missing or not reproduced: {}", mismatches.join(", "));
    }
    println!("{} reports reproduce the manifest summary", manifest.summary.len());
    Ok(())
}
