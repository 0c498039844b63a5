//! `benport` — command-line driver for the life-cycle model: solve
//! configurations, emit figure data, simulate cohort panels, run
//! estimators, and sweep shock parameters. Every run writes a manifest
//! (resolved config, seed, artifact hashes) next to its outputs; rerunning
//! from that config reproduces the artifacts byte for byte.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;

use config::RunConfig;
use output::OutputTracker;

/// Environment variable consulted for the default output directory.
const OUT_ENV: &str = "BENPORT_OUT";

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShockKind {
    Injury,
    Captivity,
    Displacement,
}

impl ShockKind {
    fn name(&self) -> &'static str {
        match self {
            ShockKind::Injury => "injury",
            ShockKind::Captivity => "captivity",
            ShockKind::Displacement => "displacement",
        }
    }
}

#[derive(Parser)]
#[command(name = "benport", about = "Life-cycle model experiments", version)]
struct Cli {
    /// Configuration file (TOML); omitted sections fall back to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config file and BENPORT_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker pool size for simulate and sweep (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Shock applied by solve and sweep; overrides the config file.
    #[arg(long, global = true)]
    shock: Option<ShockKind>,

    /// Injury disutility multiplier.
    #[arg(long, global = true)]
    kappa: Option<f64>,

    /// Captivity duration in model time.
    #[arg(long, global = true)]
    x: Option<f64>,

    /// Displacement wage factor.
    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Displacement wealth loss.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Displacement age in model time.
    #[arg(long, global = true)]
    d: Option<f64>,

    /// Keep schooling sunk at its no-shock optimum (ex-post solve).
    #[arg(long, global = true)]
    fix_schooling: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured model; reports ex-ante and ex-post plans for shocked runs.
    Solve,
    /// Emit the CSV data behind the equilibrium-locus and displacement figures.
    Figures,
    /// Simulate a synthetic cohort panel.
    Simulate,
    /// Run an estimator over a panel CSV.
    Estimate,
    /// Sweep one shock parameter over a grid.
    Sweep,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(kind) = cli.shock {
        config.shock.kind = Some(kind.name().to_string());
    }
    if let Some(v) = cli.kappa {
        config.shock.kappa = Some(v);
    }
    if let Some(v) = cli.x {
        config.shock.x = Some(v);
    }
    if let Some(v) = cli.lambda {
        config.shock.lambda = Some(v);
    }
    if let Some(v) = cli.delta {
        config.shock.delta = Some(v);
    }
    if let Some(v) = cli.d {
        config.shock.d = Some(v);
    }
    if cli.fix_schooling {
        config.shock.fix_schooling = true;
    }
    Ok(config)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: &Cli) -> Result<()> {
    let config = resolve_config(cli)?;
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut tracker = OutputTracker::new(&out_dir(cli))?;
    let command_name = match cli.command {
        Command::Solve => "solve",
        Command::Figures => "figures",
        Command::Simulate => "simulate",
        Command::Estimate => "estimate",
        Command::Sweep => "sweep",
    };
    let result = match cli.command {
        Command::Solve => commands::cmd_solve(&config, &mut tracker),
        Command::Figures => commands::cmd_figures(&config, &mut tracker),
        Command::Simulate => commands::cmd_simulate(&config, workers, &mut tracker),
        Command::Estimate => commands::cmd_estimate(&config, &mut tracker),
        Command::Sweep => commands::cmd_sweep(&config, workers, &mut tracker),
    };
    match result {
        Ok(()) => tracker.finish(command_name, &config),
        Err(e) => {
            tracker.clean_up();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
