//! `supctl`: run directories with manifests for every experiment of the
//! toolkit.
//!
//! Exit codes: 0 on success, 1 on a runtime fault, 2 on a bad command line
//! or configuration.

mod commands;
mod config;
mod manifest;
mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use supctl_core::Error as CoreError;

use commands::{Run, SimTarget};
use config::{log_filter, CliConfig, ConfigError, TuneMode};

/// Environment variable naming the default output root.
const OUT_ENV: &str = "SUPCTL_OUT";

#[derive(Parser)]
#[command(name = "supctl", version, about = "Supervisory attitude and formation control experiments")]
struct Cli {
    /// TOML run configuration; unknown keys are errors.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed, overriding `global.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory. Defaults to `<root>/<command>-s<seed>` with the root
    /// taken from $SUPCTL_OUT, then `global.out`, then `runs`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for campaigns; all cores when unset.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named scenario.
    Simulate {
        #[arg(value_enum)]
        target: SimTarget,
    },
    /// Monte-Carlo gain tuning campaign or a Pareto front.
    Tune {
        #[arg(long, value_enum)]
        mode: Option<TuneMode>,
        /// Ten-scenario campaign on a reduced annealing budget.
        #[arg(long)]
        budget_smoke: bool,
    },
    /// Train the gain surrogate on an exported dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
    },
    /// Query a trained surrogate once.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Seventeen comma-separated features; a scenario is sampled from
        /// the run seed when omitted.
        #[arg(long, allow_hyphen_values = true)]
        features: Option<String>,
    },
    /// Supervised replay of the mission catalog.
    Mission {
        /// Transient-phase surrogate.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Science-phase surrogate; fixed gains are used when omitted.
        #[arg(long)]
        science_model: Option<PathBuf>,
    },
    /// AUV leader–follower formation run.
    Auv,
    /// Recompute the metrics of a run directory and re-emit its plot data.
    Report { run_dir: PathBuf },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Simulate { target } => match target {
                SimTarget::Science => "simulate-science".into(),
                SimTarget::Relpos => "simulate-relpos".into(),
            },
            Command::Tune { .. } => "tune".into(),
            Command::Train { .. } => "train".into(),
            Command::Predict { .. } => "predict".into(),
            Command::Mission { .. } => "mission".into(),
            Command::Auv => "auv".into(),
            Command::Report { .. } => "report".into(),
        }
    }
}

fn run_dir(cli: &Cli, cfg: &CliConfig) -> PathBuf {
    if let Some(d) = &cli.out {
        return d.clone();
    }
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .or_else(|| cfg.global.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!("{}-s{}", cli.command.name(), cfg.global.seed))
}

/// Bad input is any config, parameter or usage problem found before or
/// while validating the run; everything else is a runtime fault.
fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<ConfigError>()
            || matches!(c.downcast_ref::<CoreError>(), Some(CoreError::Config(_) | CoreError::Parameter(_)))
    })
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    }
    .resolve(cli.seed);
    let level = log_filter(&cfg.global.log_level).unwrap_or(log::LevelFilter::Info);
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    if cli.jobs == Some(0) {
        anyhow::bail!(ConfigError("--jobs must be ≥ 1".into()));
    }
    if let Command::Report { run_dir } = &cli.command {
        return commands::report(run_dir);
    }
    let run = Run { dir: run_dir(cli, &cfg), config: cfg, jobs: cli.jobs };
    match &cli.command {
        Command::Simulate { target } => commands::simulate(&run, *target),
        Command::Tune { mode, budget_smoke } => commands::tune(&run, *mode, *budget_smoke),
        Command::Train { data } => commands::train(&run, data),
        Command::Predict { model, features } => commands::predict(&run, model, features.as_deref()),
        Command::Mission { model, science_model } => {
            commands::mission(&run, model.as_deref(), science_model.as_deref())
        }
        Command::Auv => commands::auv(&run),
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
