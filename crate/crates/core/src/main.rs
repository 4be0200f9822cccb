//! Command line front end.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
//! and configuration errors, 3 for numerical or precision errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use affsim::harness::{run_experiment, Experiment, ExperimentConfig};
use affsim::Error;

#[derive(Parser)]
#[command(
    name = "affsim",
    version,
    about = "Affine theta series, group Brownian motion and conditioned space-time motion: checks and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a deterministic check suite (currently `identities`).
    Check {
        suite: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a named experiment.
    Run {
        experiment: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List the experiments and what each one checks.
    List,
}

#[derive(Args)]
struct RunOpts {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Directory for CSV tables and the JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of one line per check.
    #[arg(long)]
    json: bool,
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("AFFSIM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config {
                field: "AFFSIM_THREADS".into(),
                message: format!("expected a positive integer, got `{v}`"),
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

fn build_config(experiment: &str, opts: &RunOpts) -> Result<ExperimentConfig, Error> {
    let exp: Experiment = experiment.parse()?;
    let mut cfg = match &opts.config {
        Some(path) => {
            let mut c = ExperimentConfig::load(path)?;
            c.experiment = exp;
            c
        }
        None => ExperimentConfig::new(exp),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if opts.rank.is_some() {
        cfg.rank = opts.rank;
    }
    if opts.replicas.is_some() {
        cfg.replicas = opts.replicas;
    }
    if opts.out.is_some() {
        cfg.out = opts.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes to stdout, ignoring a closed pipe (e.g. when piped into `head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn execute(experiment: &str, opts: &RunOpts) -> Result<bool, Error> {
    let cfg = build_config(experiment, opts)?;
    let report = run_experiment(&cfg)?;
    let mut text = String::new();
    if opts.json {
        text = report.to_json()?;
        text.push('\n');
    } else {
        text.push_str(&format!("{}: {}\n", report.experiment, report.anchor));
        for c in &report.checks {
            text.push_str(&format!("  {}\n", c.line()));
        }
        text.push_str(&format!(
            "{} in {:.1} s\n",
            if report.all_passed {
                "all checks passed"
            } else {
                "some checks failed"
            },
            report.wall_clock_seconds
        ));
    }
    emit(&text);
    Ok(report.all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Check { suite, opts } => {
            if suite != "identities" {
                return Err(Error::UnknownExperiment(format!(
                    "{suite} (check supports `identities`)"
                )));
            }
            execute(suite, opts)
        }
        Command::Run { experiment, opts } => execute(experiment, opts),
        Command::List => {
            let text: String = Experiment::ALL
                .iter()
                .map(|e| format!("{:<12} {}\n", e.name(), e.anchor()))
                .collect();
            emit(&text);
            Ok(true)
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
