//! Experiment runner CLI. Thin wrapper over `qkdsim::experiments`.
//!
//! Exit codes: 0 on success, 2 when every session in the run aborted (no
//! secure operating point), 1 on configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qkdsim::config::{load_plan, CliOverrides, ExperimentKind};
use qkdsim::error::Error;
use qkdsim::experiments::run_experiment;

#[derive(Parser)]
#[command(
    name = "qkdsim",
    about = "Entanglement-based QKD simulator with geometric-phase compensation",
    version
)]
struct Cli {
    /// Experiment to run: sweep-pump-phase | sweep-crystal | compensate |
    /// tomography | bbm92-run | table1
    experiment: String,

    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Output file override (CSV for sweeps/compensate, JSON otherwise).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Per-point phase compensation for sweeps.
    #[arg(long, value_parser = parse_on_off)]
    compensation: Option<bool>,
}

fn parse_on_off(value: &str) -> Result<bool, String> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on|off, got `{other}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let experiment: ExperimentKind = match cli.experiment.parse() {
        Ok(kind) => kind,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let overrides = CliOverrides {
        experiment: Some(experiment),
        seed: cli.seed,
        out: cli.out,
        compensation: cli.compensation,
    };

    let plan = match load_plan(&cli.config, &overrides) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };

    match run_experiment(&plan) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("wrote {}", outcome.output_path.display());
            if outcome.aborted_only() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Error::NoSecureOperatingPoint) => {
            eprintln!("error: {}", Error::NoSecureOperatingPoint);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
