//! Named, config-driven experiments.
//!
//! Each experiment declares its parameters, validates them, declares the
//! virtual step count it stands for against the budget, and then runs its
//! replicas in parallel. Replica `k` always draws from stream `k` of the
//! experiment's tag and results are collected in replica order, so output
//! does not depend on the worker count.

pub mod config;
pub mod report;

mod finite;
mod lattice;
mod mminf;
mod reflected;

pub use config::{parse_config_text, Entry, ExperimentConfig, Kind, Param, Value};
pub use report::{Check, ExperimentReport, Role, Table};

use crate::error::{Error, Result};
use crate::reflected::check_budget;
use crate::stats::{ComparisonVerdict, SeededStream, StreamFactory};
use rayon::prelude::*;
use std::time::Instant;

/// State handed to an experiment body.
pub struct Run {
    pub report: ExperimentReport,
    tag: u32,
}

/// Samples drawn per stream by [`Run::draws`].
const CHUNK: usize = 10_000;

impl Run {
    pub fn config(&self) -> &ExperimentConfig {
        &self.report.config
    }

    pub fn int(&self, key: &str) -> Result<u64> {
        self.report.config.int(key)
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        self.report.config.float(key)
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.report.config.floats(key)
    }

    pub fn factory(&self, sub: u32) -> StreamFactory {
        StreamFactory::new(self.report.config.seed, self.tag).child(sub)
    }

    /// One stream per replica.
    pub fn replicas<T, F>(&self, sub: u32, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut SeededStream) -> T + Sync,
    {
        let fac = self.factory(sub);
        (0..count as u64).into_par_iter().map(|r| f(&mut fac.stream(r))).collect()
    }

    /// `total` cheap draws, one stream per chunk.
    pub fn draws<T, F>(&self, sub: u32, total: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut SeededStream) -> T + Sync,
    {
        let fac = self.factory(sub);
        let chunks = total.div_ceil(CHUNK);
        let parts: Vec<Vec<T>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = fac.stream(c as u64);
                let len = CHUNK.min(total - c * CHUNK);
                (0..len).map(|_| f(&mut rng)).collect()
            })
            .collect();
        parts.into_iter().flatten().collect()
    }

    /// Adds `steps` to the declared work and refuses once over budget.
    pub fn declare(&mut self, steps: f64) -> Result<()> {
        self.report.declared_steps += steps;
        check_budget(self.report.declared_steps, self.report.config.budget)
    }

    pub fn criterion(&mut self, v: ComparisonVerdict) {
        self.report.checks.push(Check {
            role: Role::Criterion,
            verdict: v.with_seed(self.report.config.seed),
        });
    }

    pub fn diagnostic(&mut self, v: ComparisonVerdict) {
        self.report.checks.push(Check {
            role: Role::Diagnostic,
            verdict: v.with_seed(self.report.config.seed),
        });
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.report.metrics.push((name.to_string(), value));
    }

    pub fn table(&mut self, t: Table) {
        self.report.tables.push(t);
    }
}

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub tag: u32,
    pub params: &'static [Param],
    body: fn(&mut Run) -> Result<()>,
}

static REGISTRY: &[Experiment] = &[
    finite::EXACT,
    reflected::NU,
    reflected::HITTING,
    reflected::FREE,
    reflected::COLLAPSE,
    reflected::OSC,
    lattice::SRWS,
    lattice::LOCALTIME,
    lattice::DIRICHLET,
    lattice::PLANE,
    mminf::F_LAW,
    mminf::HITTING,
    mminf::TIME_CHANGE,
    mminf::CASCADE,
];

pub fn registry() -> &'static [Experiment] {
    REGISTRY
}

/// Every experiment, in suite order.
pub fn suite() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|e| e.name)
}

pub fn find(name: &str) -> Result<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<&str> = suite().collect();
        Error::Config(format!("unknown experiment `{name}` (known: {})", names.join(", ")))
    })
}

/// Defaults for `name`, overridden by a config file and then by flags.
pub fn configure(name: &str, file: &[Entry], flags: &[(String, String)]) -> Result<ExperimentConfig> {
    let e = find(name)?;
    ExperimentConfig::resolve(name, e.params, file, flags)
}

pub fn run(config: ExperimentConfig) -> Result<ExperimentReport> {
    let e = find(&config.experiment)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|err| Error::Config(format!("worker pool: {err}")))?;
    let start = Instant::now();
    let mut run = Run {
        report: ExperimentReport::new(config),
        tag: e.tag,
    };
    pool.install(|| (e.body)(&mut run))?;
    run.report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(run.report)
}

pub(crate) fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(msg()))
    }
}

/// `-sign * value <= -sign * threshold` as a verdict that passes when
/// `value >= threshold`.
pub(crate) fn at_least(name: &str, value: f64, threshold: f64) -> ComparisonVerdict {
    ComparisonVerdict::new(name, crate::stats::Statistic::Trend, -value, -threshold)
        .with_note(format!("value={value:.6} needs >= {threshold}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_consistent() {
        let mut tags: Vec<u32> = REGISTRY.iter().map(|e| e.tag).collect();
        tags.sort();
        tags.dedup();
        assert_eq!(tags.len(), REGISTRY.len());
        for e in REGISTRY {
            // defaults parse
            configure(e.name, &[], &[]).unwrap();
        }
        assert!(matches!(find("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn budget_refusal_happens_before_work() {
        let cfg = configure("reflected-hitting", &[], &[("budget".into(), "1000".into())]).unwrap();
        let err = run(cfg).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        assert_eq!(err.exit_code(), 3);
    }
}
