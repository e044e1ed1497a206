//! `qsmp`: runs one configured experiment and emits a JSON report.
//!
//! Exit codes: 0 when every check in the report passed, 1 when the
//! run completed but some check failed, 2 when the run could not be
//! carried out at all (missing or invalid config, unwritable output).
//! The report bytes depend only on the config and seed; wall-clock
//! timing goes to stderr so saved reports stay reproducible.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Parser;

use qsmp_cli::{run, Config, Experiment};

#[derive(Debug, Parser)]
#[command(name = "qsmp", about = "Experiment runner for the one-round protocol simulator")]
struct Cli {
    /// Path to a JSON config file selecting the experiment.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed; overrides the `seed` field of the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Write the report here instead of the config's `output_path`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// List the available experiment names and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        for experiment in Experiment::ALL {
            println!("{}", experiment.name());
        }
        return ExitCode::SUCCESS;
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs the experiment named by the CLI and returns whether every
/// check passed. Errors mean the run itself could not happen.
fn execute(cli: &Cli) -> Result<bool> {
    let Some(config_path) = &cli.config else {
        bail!("--config is required (or use --list to see the experiments)");
    };
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let mut config = Config::from_json(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    let started = Instant::now();
    let report = run(&config)?;
    eprintln!(
        "{}: {} in {} ms",
        report.experiment,
        if report.pass { "pass" } else { "FAIL" },
        started.elapsed().as_millis()
    );

    let rendered = report.to_json();
    let destination = cli.out.clone().or_else(|| config.output_path.as_ref().map(PathBuf::from));
    match destination {
        Some(path) => fs::write(&path, rendered)
            .with_context(|| format!("cannot write report to {}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(report.pass)
}
