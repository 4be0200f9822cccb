//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Every experiment runs at its default configuration (two seeds for the
//! stochastic ones). Run with `cargo test --test acceptance`; the lines
//! bypass output capture. The test fails only on a criterion outside
//! `KNOWN_FAILURES`, so a documented failure is still printed as FAIL but
//! does not hide regressions elsewhere.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use affsim::harness::{run_experiment, Check, Experiment, ExperimentConfig, ExperimentReport};

/// Criteria that fail by design: the weighted estimator at u = 0.2 has no
/// surviving paths (survival probability near e^{-35}).
const KNOWN_FAILURES: &[usize] = &[8];

struct Criterion {
    id: usize,
    title: &'static str,
    experiment: Experiment,
    /// Substring selecting the checks that belong to the criterion; other
    /// checks of the same experiment are printed as supplementary.
    filter: Option<&'static str>,
    /// Wall clock limit in seconds for the whole run (all seeds).
    runtime: Option<f64>,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "identity suite",
        experiment: Experiment::Identities,
        filter: None,
        runtime: Some(30.0),
    },
    Criterion {
        id: 2,
        title: "characters and heat kernel",
        experiment: Experiment::Characters,
        filter: None,
        runtime: Some(10.0),
    },
    Criterion {
        id: 3,
        title: "radial law of Brownian motion",
        experiment: Experiment::Radial,
        filter: None,
        runtime: Some(120.0),
    },
    Criterion {
        id: 4,
        title: "Haar average of the heat kernel",
        experiment: Experiment::Endorbit,
        filter: Some("s_sigma=1 "),
        runtime: Some(120.0),
    },
    Criterion {
        id: 5,
        title: "Kirillov formula",
        experiment: Experiment::Kirillov,
        filter: None,
        runtime: Some(120.0),
    },
    Criterion {
        id: 6,
        title: "conditional endpoint expectation",
        experiment: Experiment::Endpoint,
        filter: Some("sigma=1:"),
        runtime: Some(600.0),
    },
    Criterion {
        id: 7,
        title: "martingale probe",
        experiment: Experiment::Martingale,
        filter: None,
        runtime: None,
    },
    Criterion {
        id: 8,
        title: "conditioned process expectations at u = 0.2",
        experiment: Experiment::PhiQ,
        filter: Some("u=0.2 "),
        runtime: None,
    },
    Criterion {
        id: 9,
        title: "conditioned motion vs sheet radial process",
        experiment: Experiment::Main,
        filter: None,
        runtime: Some(1200.0),
    },
    Criterion {
        id: 10,
        title: "entrance limit",
        experiment: Experiment::Entrance,
        filter: Some("chi-square"),
        runtime: None,
    },
    Criterion {
        id: 11,
        title: "gauge equivariance",
        experiment: Experiment::Gauge,
        filter: None,
        runtime: None,
    },
];

fn evaluate(c: &Criterion, report: &ExperimentReport) -> (bool, Vec<String>) {
    let (mine, extra): (Vec<&Check>, Vec<&Check>) = report
        .checks
        .iter()
        .partition(|k| c.filter.is_none_or(|f| k.name.contains(f)));
    let mut lines = Vec::new();
    let mut ok = !mine.is_empty() && mine.iter().all(|k| k.passed);
    let failed = mine.iter().filter(|k| !k.passed).count();
    let mut summary = format!("{}/{} checks passed", mine.len() - failed, mine.len());
    if let Some(limit) = c.runtime {
        ok &= report.wall_clock_seconds < limit;
        summary.push_str(&format!(
            ", runtime {:.1} s < {limit} s",
            report.wall_clock_seconds
        ));
    } else {
        summary.push_str(&format!(", runtime {:.1} s", report.wall_clock_seconds));
    }
    lines.push(format!(
        "{} criterion {:>2} ({}): {summary}",
        if ok { "PASS" } else { "FAIL" },
        c.id,
        c.title
    ));
    for k in mine.iter().filter(|k| !k.passed) {
        lines.push(format!("       failing check: {}", k.line()));
    }
    let extra_failed = extra.iter().filter(|k| !k.passed).count();
    if !extra.is_empty() {
        lines.push(format!(
            "       supplementary checks of `{}`: {}/{} passed",
            report.experiment,
            extra.len() - extra_failed,
            extra.len()
        ));
    }
    (ok, lines)
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

/// Runs `exp` in pools of 1 and 3 threads and compares the CSV bytes.
fn reproducible(exp: Experiment) -> (bool, String) {
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let dir = tempfile::tempdir().expect("temporary directory");
        let mut cfg = ExperimentConfig::new(exp);
        cfg.seed = 77;
        cfg.out = Some(dir.path().to_path_buf());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_experiment(&cfg))
            .expect("experiment runs");
        outputs.push(csv_files(dir.path()));
    }
    let files = outputs[0].len();
    let bytes: usize = outputs[0].values().map(Vec::len).sum();
    let same = files > 0 && outputs[0] == outputs[1];
    (
        same,
        format!("{}: {files} CSV files, {bytes} bytes", exp.name()),
    )
}

/// Writes past the test harness capture so the lines show up in a plain
/// `cargo test` run.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for c in CRITERIA {
        let report = run_experiment(&ExperimentConfig::new(c.experiment))
            .unwrap_or_else(|e| panic!("criterion {} ({}) errored: {e}", c.id, c.experiment));
        let (ok, text) = evaluate(c, &report);
        for l in &text {
            emit(l);
        }
        if !ok {
            failed.push(c.id);
        }
    }

    let mut ok = true;
    let mut notes = Vec::new();
    for exp in [
        Experiment::Endorbit,
        Experiment::Radial,
        Experiment::Martingale,
        Experiment::Gauge,
    ] {
        let (same, note) = reproducible(exp);
        ok &= same;
        notes.push(note);
    }
    emit(&format!(
        "{} criterion 12 (reproducibility): byte-identical CSV across reruns with 1 and 3 threads ({})",
        if ok { "PASS" } else { "FAIL" },
        notes.join("; ")
    ));
    if !ok {
        failed.push(12);
    }

    let unexpected: Vec<usize> = failed
        .iter()
        .copied()
        .filter(|id| !KNOWN_FAILURES.contains(id))
        .collect();
    emit(&format!(
        "failed criteria: {failed:?} (known and documented: {KNOWN_FAILURES:?})"
    ));
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
