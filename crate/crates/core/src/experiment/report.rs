//! Experiment reports and their CSV files.
//!
//! Every CSV starts with `# key=value` lines echoing the settings, so any
//! file can be re-run from its header. Wall-clock time goes only to the
//! plain-text summary, which keeps the CSVs byte-identical across runs.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::stats::ComparisonVerdict;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Decides the exit status.
    Criterion,
    /// Reported only.
    Diagnostic,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Criterion => "criterion",
            Role::Diagnostic => "diagnostic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub role: Role,
    pub verdict: ComparisonVerdict,
}

/// A named CSV payload.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
        debug_assert_eq!(row.len(), self.columns.len(), "table {}", self.name);
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub metrics: Vec<(String, f64)>,
    /// Virtual steps declared against the budget.
    pub declared_steps: f64,
    pub wall_seconds: f64,
    pub tables: Vec<Table>,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            checks: Vec::new(),
            metrics: Vec::new(),
            declared_steps: 0.0,
            wall_seconds: 0.0,
            tables: Vec::new(),
        }
    }

    pub fn criteria(&self) -> impl Iterator<Item = &ComparisonVerdict> {
        self.checks.iter().filter(|c| c.role == Role::Criterion).map(|c| &c.verdict)
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &ComparisonVerdict> {
        self.checks.iter().filter(|c| c.role == Role::Diagnostic).map(|c| &c.verdict)
    }

    /// All criteria pass.
    pub fn passed(&self) -> bool {
        self.criteria().all(|v| v.pass)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|m| m.1)
    }

    fn write_csv(&self, path: &Path, columns: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut f = fs::File::create(path)?;
        for line in self.config.header() {
            writeln!(f, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(f);
        w.write_record(columns).map_err(csv_error)?;
        for r in rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    fn verdict_rows(&self) -> Vec<Vec<String>> {
        let join = |xs: Vec<String>| xs.join(";");
        let mut rows: Vec<Vec<String>> = self
            .checks
            .iter()
            .map(|c| {
                let v = &c.verdict;
                vec![
                    c.role.as_str().to_string(),
                    v.name.clone(),
                    v.statistic.to_string(),
                    v.value.to_string(),
                    v.threshold.to_string(),
                    v.pass.to_string(),
                    join(v.sample_sizes.iter().map(|s| s.to_string()).collect()),
                    join(v.std_errors.iter().map(|s| s.to_string()).collect()),
                    v.note.clone(),
                ]
            })
            .collect();
        rows.extend(self.metrics.iter().map(|(name, value)| {
            vec![
                "metric".into(),
                name.clone(),
                String::new(),
                value.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]
        }));
        rows.push(vec![
            "metric".into(),
            "declared_steps".into(),
            String::new(),
            self.declared_steps.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        rows
    }

    /// Writes `report.csv`, one CSV per table and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let columns: Vec<String> = ["role", "name", "statistic", "value", "threshold", "pass", "sizes", "std_errors", "note"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = dir.join("report.csv");
        self.write_csv(&p, &columns, &self.verdict_rows())?;
        paths.push(p);
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            self.write_csv(&p, &t.columns, &t.rows)?;
            paths.push(p);
        }
        let p = dir.join("summary.txt");
        fs::write(&p, self.summary())?;
        paths.push(p);
        Ok(paths)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for line in self.config.header() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" });
        for c in &self.checks {
            let _ = writeln!(s, "{:<10} {}", c.role.as_str(), c.verdict);
        }
        for (name, v) in &self.metrics {
            let _ = writeln!(s, "metric     {name} = {v}");
        }
        let _ = writeln!(s, "declared steps: {:e}", self.declared_steps);
        let _ = writeln!(s, "wall clock: {:.2} s", self.wall_seconds);
        s
    }
}
