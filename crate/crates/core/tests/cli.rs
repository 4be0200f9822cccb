//! Command line behaviour: exit codes, configuration files, report layout
//! and byte-reproducible output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use affsim::harness::{Experiment, REPORT_SCHEMA};

fn affsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn list_names_every_experiment() {
    let out = affsim(&["list"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for e in Experiment::ALL {
        assert!(
            text.lines().any(|l| l.starts_with(e.name())),
            "missing {}",
            e.name()
        );
    }
}

#[test]
fn usage_and_configuration_errors_exit_with_2() {
    assert_eq!(code(&affsim(&["run", "no-such-experiment"])), 2);
    assert_eq!(code(&affsim(&["check", "characters"])), 2);
    assert_eq!(code(&affsim(&["run", "endorbit", "--rank", "2"])), 2);
    assert_eq!(code(&affsim(&["run", "gauge", "--replicas", "0"])), 2);
    assert_eq!(code(&affsim(&["frobnicate"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "experiment = gauge\nunknown_key = 3\n").unwrap();
    assert_eq!(
        code(&affsim(&[
            "run",
            "gauge",
            "--config",
            bad.to_str().unwrap()
        ])),
        2
    );

    let out = Command::new(env!("CARGO_BIN_EXE_affsim"))
        .args(["run", "gauge"])
        .env("AFFSIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("AFFSIM_THREADS"));
}

#[test]
fn identities_check_passes() {
    let out = affsim(&["check", "identities"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn json_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small gauge run\nexperiment = gauge\nreplicas = 20\nrepeats = 1\n",
    )
    .unwrap();
    let out = affsim(&[
        "run",
        "gauge",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(matches!(code(&out), 0 | 1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], REPORT_SCHEMA);
    assert_eq!(report["experiment"], "gauge");
    assert_eq!(report["seeds"], serde_json::json!([9]));
    assert_eq!(report["config"]["replicas"], 20);
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    let all = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(report["all_passed"].as_bool().unwrap(), all);
    assert_eq!(code(&out), if all { 0 } else { 1 });

    assert!(dir.path().join("gauge_report.json").exists());
    for f in report["files"].as_array().unwrap() {
        assert!(
            dir.path().join(f.as_str().unwrap()).exists(),
            "listed file {f} missing"
        );
    }
    assert!(!csv_bytes(dir.path()).is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let run = |seed: &str, threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_affsim"))
            .args([
                "run",
                "endorbit",
                "--replicas",
                "3000",
                "--seed",
                seed,
                "--out",
            ])
            .arg(dir.path())
            .env("AFFSIM_THREADS", threads)
            .output()
            .unwrap();
        assert!(matches!(code(&out), 0 | 1));
        csv_bytes(dir.path())
    };
    let a = run("11", "1");
    assert!(!a.is_empty());
    assert_eq!(a, run("11", "1"));
    assert_eq!(a, run("11", "4"));
    assert_ne!(a, run("12", "1"));
}
