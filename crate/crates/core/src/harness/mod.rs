//! Experiment orchestration: configuration, the named suites and reports.

pub mod config;
pub mod experiments;
pub mod report;

use std::time::Instant;

pub use config::{EntranceChoice, Experiment, ExperimentConfig};
pub use report::{Check, ExperimentReport, Outcome, Relation, Table, REPORT_SCHEMA};

use crate::error::Result;

/// Runs the configured experiment at every seed, writes CSV tables and the
/// JSON report when an output directory is set, and returns the report.
///
/// Deterministic suites run once; stochastic ones run at each seed of
/// [`ExperimentConfig::seeds`], with check names prefixed by the seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let seeds = if cfg.experiment.is_stochastic() {
        cfg.seeds()
    } else {
        vec![cfg.seed]
    };
    let mut all = Outcome::default();
    for &seed in &seeds {
        let o = experiments::run(cfg, seed)?;
        if cfg.experiment.is_stochastic() {
            all.absorb(&format!("seed={seed}: "), o);
        } else {
            all.absorb("", o);
        }
    }
    let mut files = Vec::new();
    if let Some(dir) = &cfg.out {
        files = report::write_tables(dir, cfg.experiment.name(), &all.tables)?;
    }
    let mut rep = ExperimentReport {
        schema: report::REPORT_SCHEMA,
        experiment: cfg.experiment.name().to_string(),
        anchor: cfg.experiment.anchor(),
        config: cfg.clone(),
        seeds,
        all_passed: all.checks.iter().all(|c| c.passed),
        checks: all.checks,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        summaries: all.summaries,
        files,
    };
    if let Some(dir) = &cfg.out {
        let name = format!("{}_report.json", rep.experiment);
        rep.files.push(name);
        report::write_report(dir, &rep)?;
    }
    Ok(rep)
}
