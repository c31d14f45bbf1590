//! Experiment driver: normal forms, nonresonance scans, stability sweeps,
//! and Galerkin model checks from TOML configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hamnf::cli::{self, CliError};
use hamnf::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hamnf", version, about = "Birkhoff normal forms and long-time stability experiments")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (falls back to HAMNF_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: csv,json.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a normal form and write its artifact directory.
    Nf,
    /// Nonresonance scans, diophantine margins, measure estimates.
    Resonance,
    /// Stability sweeps and trajectory exports.
    Simulate,
    /// Build a Galerkin model and run the hypothesis checks.
    Galerkin,
}

fn run(args: &Args) -> Result<(), CliError> {
    let threads = args
        .threads
        .or_else(|| std::env::var("HAMNF_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {}", e)))?;
    }

    let config_path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = ExperimentConfig::from_path(config_path)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(formats) = &args.format {
        cfg.output.formats = formats.clone();
    }
    let base_dir = config_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));

    match args.command {
        Command::Nf => cli::cmd_nf(&cfg, &base_dir),
        Command::Resonance => cli::cmd_resonance(&cfg, &base_dir),
        Command::Simulate => cli::cmd_simulate(&cfg, &base_dir),
        Command::Galerkin => cli::cmd_galerkin(&cfg, &base_dir),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
