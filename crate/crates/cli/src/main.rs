//! `reachcert`: solve reach-avoid value functions, certify initial balls and
//! run seeded experiments from JSON configuration files.
//!
//! Exit codes: 0 success / certified, 1 not certified, 2 configuration or
//! input error, 3 numerical non-convergence (artifacts are still written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use reachcert::certify::Method;
use reachcert::systems::Mode;

use crate::config::RunConfig;
use crate::output::{write_manifest, Artifacts, RunManifest};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "reachcert",
    version,
    about = "Discounted reach-avoid value functions and tube certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run value iteration and write the field, its CSV export and a summary
    Solve(Args),
    /// Certify a single ball (`certify.center`) or cover a region (`certify.region`)
    Certify(Args),
    /// Monte-Carlo success rates of the greedy policy
    Simulate(Args),
    /// Discount-factor sweep of learned and certified set volumes
    Sweep(Args),
    /// Per-method certificate latency distribution
    Latency(Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Certify(_) => "certify",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Latency(_) => "latency",
        }
    }

    fn args(&self) -> &Args {
        match self {
            Command::Solve(a)
            | Command::Certify(a)
            | Command::Simulate(a)
            | Command::Sweep(a)
            | Command::Latency(a) => a,
        }
    }
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts and the run manifest
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the system mode: reach_avoid, viability or reach
    #[arg(long)]
    mode: Option<Mode>,
    /// Overrides the certification method: lipschitz, socp or both
    #[arg(long)]
    method: Option<Method>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let start = Instant::now();
    let command = cli.command;
    let args = command.args();

    let config = match prepare(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut artifacts = match Artifacts::create(&args.out) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = match &command {
        Command::Solve(_) => commands::solve(&config, &mut artifacts),
        Command::Certify(_) => commands::certify(&config, &mut artifacts),
        Command::Simulate(_) => commands::simulate(&config, &mut artifacts),
        Command::Sweep(_) => commands::sweep(&config, &mut artifacts),
        Command::Latency(_) => commands::latency(&config, &mut artifacts),
    };
    let code = match result {
        Ok(status) => status.exit_code() as u8,
        Err(e) => {
            eprintln!("error: {e:#}");
            classify(&e)
        }
    };

    let manifest = RunManifest {
        command: command.name(),
        config: &config,
        artifacts: artifacts
            .written()
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        exit_code: code as i32,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    if let Err(e) = write_manifest(&artifacts, &manifest) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_CONFIG);
    }
    ExitCode::from(code)
}

/// Loads the config, applies command-line overrides and sizes the thread pool.
fn prepare(args: &Args) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(mode) = args.mode {
        config.system.mode = mode;
    }
    if let Some(method) = args.method {
        if let Some(c) = config.certify.as_mut() {
            c.method = method;
        }
    }
    if let Some(n) = args.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(config)
}

/// Numerical breakdowns exit with 3; everything else is an input problem.
fn classify(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<reachcert::Error>() {
        Some(reachcert::Error::ContractionViolated { .. }) | Some(reachcert::Error::SolverFailure { .. }) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_CONFIG,
    }
}
