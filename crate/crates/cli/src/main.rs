use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use slamsim::harness::{self, RunRecord, ScenarioConfig, SuiteConfig};
use slamsim::pose_sources::SensorProfile;

/// Closed-loop multirotor simulation with SLAM-like pose feedback.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a multi-seed suite and print the comparison table.
    Suite {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a saved run log.
    Metrics {
        log: PathBuf,
        /// Write the metrics CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in sensor profiles as JSON.
    ListProfiles,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Exit code 2 flags a completed command whose result is not usable:
/// a diverged run or an unsettled step response.
fn verdict(diverged: bool, unsettled: usize) -> ExitCode {
    if diverged {
        eprintln!("run diverged");
        ExitCode::from(2)
    } else if unsettled > 0 {
        eprintln!("unsettled response in {unsettled} step(s)");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = ScenarioConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let outcome = harness::run_and_save(&cfg)?;
            print!("{}", outcome.report.to_table());
            Ok(verdict(outcome.report.diverged(), outcome.report.unsettled_steps))
        }
        Command::Suite { config, out } => {
            let mut cfg = SuiteConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let report = harness::run_suite(&cfg)?;
            print!("{}", report.to_table());
            let diverged = report.summaries.iter().any(|s| s.diverged > 0);
            let unsettled = report.summaries.iter().map(|s| s.unsettled_steps).sum();
            Ok(verdict(diverged, unsettled))
        }
        Command::Metrics { log, out } => {
            let record = RunRecord::load(&log).with_context(|| format!("reading {}", log.display()))?;
            let report = harness::compute_report(&record)?;
            print!("{}", report.to_table());
            if let Some(path) = out {
                report.write_csv(std::fs::File::create(&path)?)?;
            }
            Ok(verdict(report.diverged(), report.unsettled_steps))
        }
        Command::ListProfiles => {
            println!("{}", serde_json::to_string_pretty(&SensorProfile::builtins())?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
