//! Check results, CSV tables and the JSON report.
//!
//! CSV files contain no timing information, so equal seeds give
//! byte-identical files. The JSON report carries the wall-clock time and is
//! otherwise deterministic too.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;

/// Version tag of the JSON report layout.
pub const REPORT_SCHEMA: &str = "affsim-report/1";

/// How a check statistic is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// Passes when `statistic ≤ tolerance`.
    #[serde(rename = "<=")]
    AtMost,
    /// Passes when `statistic > tolerance`.
    #[serde(rename = ">")]
    Above,
    /// Passes when `statistic ≥ tolerance`.
    #[serde(rename = ">=")]
    AtLeast,
}

/// One named pass/fail check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn new(name: impl Into<String>, statistic: f64, relation: Relation, tolerance: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => statistic <= tolerance,
            Relation::Above => statistic > tolerance,
            Relation::AtLeast => statistic >= tolerance,
        };
        Check {
            name: name.into(),
            statistic,
            relation,
            tolerance,
            passed,
            note: String::new(),
        }
    }

    pub fn at_most(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self::new(name, statistic, Relation::AtMost, tolerance)
    }

    pub fn above(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self::new(name, statistic, Relation::Above, tolerance)
    }

    pub fn at_least(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Self::new(name, statistic, Relation::AtLeast, tolerance)
    }

    /// A check that could not be evaluated.
    pub fn failed(
        name: impl Into<String>,
        relation: Relation,
        tolerance: f64,
        note: impl Into<String>,
    ) -> Self {
        Check {
            name: name.into(),
            statistic: f64::NAN,
            relation,
            tolerance,
            passed: false,
            note: note.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// `name: statistic rel tolerance` for terminal output.
    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
        };
        let mut s = format!(
            "{} {}: {:.6e} {rel} {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            self.tolerance
        );
        if !self.note.is_empty() {
            s.push_str(&format!(" ({})", self.note));
        }
        s
    }
}

/// A numeric table written as CSV. Column names carry units where relevant.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text: a header row, then one line per row with shortest
    /// round-trip formatting of every value.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Everything one experiment produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub summaries: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn summary(&mut self, key: impl Into<String>, v: f64) {
        self.summaries.insert(key.into(), v);
    }

    /// Appends `other`, prefixing its names.
    pub fn absorb(&mut self, prefix: &str, other: Outcome) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
        for mut t in other.tables {
            t.name = format!("{prefix}{}", t.name).replace([':', ' ', '='], "_");
            self.tables.push(t);
        }
        for (k, v) in other.summaries {
            self.summaries.insert(format!("{prefix}{k}"), v);
        }
    }
}

/// Machine-readable experiment report.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema: &'static str,
    pub experiment: String,
    pub anchor: &'static str,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
    pub wall_clock_seconds: f64,
    pub summaries: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes the tables as `<experiment>_<table>.csv` and the report as
/// `<experiment>_report.json` into `dir`; returns the CSV file names.
pub fn write_tables(dir: &Path, experiment: &str, tables: &[Table]) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in tables {
        let name = format!("{experiment}_{}.csv", t.name);
        fs::File::create(dir.join(&name))?.write_all(t.to_csv().as_bytes())?;
        files.push(name);
    }
    Ok(files)
}

pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<String> {
    fs::create_dir_all(dir)?;
    let name = format!("{}_report.json", report.experiment);
    fs::write(dir.join(&name), report.to_json()?)?;
    Ok(name)
}
