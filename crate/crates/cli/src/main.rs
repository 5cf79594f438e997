use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kitaev_core::experiment::{self, ExperimentConfig, PRESETS};
use kitaev_core::oracle::oracle_check;

/// Prepare, measure and mitigate Kitaev chain eigenstates on a simulated
/// noisy qubit line.
#[derive(Parser)]
#[command(name = "kitaev", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write results, tables and a manifest.
    Run(RunArgs),
    /// Rebuild the CSV tables from one or more result directories.
    Report {
        /// Result directories written by `run`.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where to write the tables (defaults to the first directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the pipeline against dense exact diagonalization.
    OracleCheck {
        #[arg(long, default_value_t = 5)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Bundled configuration (paper6, paper7 or smoke).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Output directory. Overrides the config and the output root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory that relative config output paths are resolved against.
    #[arg(long, env = "KITAEV_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    no_readout: bool,
    #[arg(long)]
    no_postselect: bool,
    #[arg(long)]
    no_purify: bool,
    #[arg(long)]
    no_idle_noise: bool,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => ExperimentConfig::preset(name).with_context(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            format!("available presets: {}", names.join(", "))
        })?,
        (None, Some(path)) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, None) => bail!("pass --preset or --config"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = args.shots {
        cfg.shots = shots;
    }
    if let Some(b) = args.bootstrap {
        cfg.bootstrap = b;
    }
    cfg.mitigation.readout &= !args.no_readout;
    cfg.mitigation.postselect &= !args.no_postselect;
    cfg.mitigation.purify &= !args.no_purify;
    cfg.idle_noise_on &= !args.no_idle_noise;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = load_config(&args)?;
    let out = match (&args.out, &args.output_root) {
        (Some(out), _) => out.clone(),
        (None, Some(root)) => root.join(&cfg.output),
        (None, None) => cfg.output.clone(),
    };
    let results = experiment::run_experiment(&cfg, &out, args.jobs)?;
    let failed: Vec<_> = results.iter().filter(|r| !r.succeeded()).collect();
    for r in &failed {
        eprintln!(
            "mu = {} state {}: {}",
            r.parameters.mu,
            r.occupation,
            r.error.as_deref().unwrap_or_default()
        );
    }
    println!("{} points, {} failed, results in {}", results.len(), failed.len(), out.display());
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn report(dirs: &[PathBuf], out: Option<PathBuf>) -> Result<ExitCode> {
    let mut results = Vec::new();
    for dir in dirs {
        results.extend(experiment::load_results(dir).with_context(|| format!("loading {}", dir.display()))?);
    }
    let out = out.unwrap_or_else(|| dirs[0].clone());
    experiment::report_tables(&results, &out)?;
    println!("wrote tables for {} points to {}", results.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn check(max_n: usize, seed: u64) -> Result<ExitCode> {
    let checks = oracle_check(max_n, seed)?;
    for c in &checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        println!("{status} {:<26} cases {:>4}  worst {:.2e}  tol {:.0e}", c.name, c.cases, c.worst, c.tolerance);
    }
    Ok(if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Report { dirs, out } => report(&dirs, out),
        Command::OracleCheck { max_n, seed } => check(max_n, seed),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
