use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wnv_cli::run::{self, to_json, wavespeed_report, write_file as write, EXIT_DECIDED, EXIT_FAILURE};
use wnv_cli::scenario::{parse_scenario, Analysis};
use wnv_cli::sweep::{parse_sweep, write_sweep};
use wnv_cli::CliError;
use wnv_core::analysis::Evidence;

#[derive(Parser)]
#[command(name = "wnv-lab", version, about = "Free-boundary West Nile virus model: thresholds, simulations, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (a sweep file for `sweep`).
    #[arg(long)]
    scenario: PathBuf,
    /// Directory receiving the output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized audit sample points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form thresholds checked against the discrete eigen-oracle.
    Thresholds {
        #[command(flatten)]
        common: Common,
        /// Oracle grid size; 0 skips the oracle.
        #[arg(long, default_value_t = 2000)]
        oracle_grid: usize,
    },
    /// Full run: trace.csv and report.json.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Spreading/vanishing verdict only: classification.json.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Minimal wave speed and semi-wavefront speed: wavespeed.json.
    Wavespeed {
        #[command(flatten)]
        common: Common,
    },
    /// Cartesian sweep: summary.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides the worker count in the sweep file.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Serialize)]
struct ClassificationOutput {
    verdict: &'static str,
    t_decided: Option<f64>,
    evidence: Option<Evidence>,
    t_end: f64,
    bounds_ok: run::BoundsOk,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Thresholds { common, oracle_grid } => {
            let scenario = parse_scenario(&read(&common.scenario)?)?;
            let out = run::thresholds(&scenario, oracle_grid)?;
            write(&common.out, "thresholds.json", &to_json(&out))?;
            Ok(EXIT_DECIDED)
        }
        Command::Simulate { common } => {
            let scenario = parse_scenario(&read(&common.scenario)?)?;
            run::run_scenario(&scenario, &common.out, common.seed)
        }
        Command::Classify { common } => {
            let mut scenario = parse_scenario(&read(&common.scenario)?)?;
            scenario.analyses = vec![Analysis::Classify];
            let report = run::simulate(&scenario, common.seed)?.report;
            let out = ClassificationOutput {
                verdict: report.verdict,
                t_decided: report.t_decided,
                evidence: report.evidence,
                t_end: report.t_end,
                bounds_ok: report.bounds_ok.clone(),
            };
            write(&common.out, "classification.json", &to_json(&out))?;
            Ok(report.exit_code())
        }
        Command::Wavespeed { common } => {
            let scenario = parse_scenario(&read(&common.scenario)?)?;
            let out = wavespeed_report(&scenario.params, common.seed)?;
            write(&common.out, "wavespeed.json", &to_json(&out))?;
            Ok(EXIT_DECIDED)
        }
        Command::Sweep { common, workers } => {
            let mut spec = parse_sweep(&read(&common.scenario)?)?;
            if let Some(w) = workers {
                spec.workers = w;
            }
            write_sweep(&spec, &common.out, common.seed)?;
            Ok(EXIT_DECIDED)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(cli.command).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_FAILURE
    });
    ExitCode::from(code as u8)
}
