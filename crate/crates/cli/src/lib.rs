//! Command-line driver: parses one experiment configuration, runs the
//! requested study, and writes one CSV report.
//!
//! Exit codes: 0 on success, 2 for argument and configuration problems
//! (unknown subcommand, missing or malformed configuration), 1 for runtime
//! failures while the experiment executes or the report is written.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ddkf_core::harness::{
    compare_run, ddkf_run_report, default_overlap_values, default_time_overlap_values,
    kf_run_report, overlap_sweep_csv, scaleup_run, sweep_overlap, sweep_time, time_sweep_csv,
    variance_study, CsvDoc, ExperimentConfig,
};

/// Repetitions entering the scale-up medians (one extra warm-up run of each
/// filter is discarded).
const SCALEUP_REPS: usize = 5;

#[derive(Parser)]
#[command(
    name = "ddkf",
    version,
    about = "Experiment driver for domain-decomposed Kalman filtering on a \
             shallow-water testbed"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Where the CSV report is written.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full filter; report per-step RMSE against the truth.
    Kf(RunArgs),
    /// Run the decomposed filter; report per-step RMSE per window.
    Ddkf(RunArgs),
    /// Run both filters; report per-step deviation and both RMSE series.
    Compare(RunArgs),
    /// Sweep the spatial overlap; report the worst deviation per overlap.
    SweepOverlap(RunArgs),
    /// Sweep the window overlap; report the worst deviation per window.
    SweepTime(RunArgs),
    /// Run the variance studies (model trust, observation trust, split noise).
    VarianceStudy(RunArgs),
    /// Time both filters; report the measured and modeled scale-up factor.
    Scaleup(RunArgs),
}

struct CliError {
    code: i32,
    message: String,
}

impl From<ddkf_core::Error> for CliError {
    fn from(e: ddkf_core::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

/// Runs the driver on `argv` (including the program name) and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Prints --help/--version to stdout, true errors (with usage) to
            // stderr, matching the exit code.
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            println!("wrote {}", out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    if !args.config.exists() {
        return Err(CliError {
            code: 2,
            message: format!("configuration file not found: {}", args.config.display()),
        });
    }
    let mut cfg = ExperimentConfig::from_file(&args.config).map_err(|e| CliError {
        code: 2,
        message: e.to_string(),
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError {
        code: 2,
        message: e.to_string(),
    })?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<PathBuf, CliError> {
    let args = match &cli.cmd {
        Cmd::Kf(a)
        | Cmd::Ddkf(a)
        | Cmd::Compare(a)
        | Cmd::SweepOverlap(a)
        | Cmd::SweepTime(a)
        | Cmd::VarianceStudy(a)
        | Cmd::Scaleup(a) => a,
    };
    let cfg = load_config(args)?;
    let doc: CsvDoc = match &cli.cmd {
        Cmd::Kf(_) => kf_run_report(&cfg)?,
        Cmd::Ddkf(_) => ddkf_run_report(&cfg)?,
        Cmd::Compare(_) => compare_run(&cfg)?.to_csv()?,
        Cmd::SweepOverlap(_) => {
            let rows = sweep_overlap(&cfg, &default_overlap_values(cfg.n))?;
            overlap_sweep_csv(&rows)?
        }
        Cmd::SweepTime(_) => {
            let rows = sweep_time(&cfg, &default_time_overlap_values(cfg.steps()))?;
            time_sweep_csv(&rows)?
        }
        Cmd::VarianceStudy(_) => variance_study(&cfg)?.to_csv()?,
        Cmd::Scaleup(_) => scaleup_run(&cfg, SCALEUP_REPS)?.to_csv()?,
    };
    doc.write_to(&args.out)?;
    Ok(args.out.clone())
}
