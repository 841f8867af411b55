//! Random streams and the statistical comparison toolkit shared by every
//! experiment.

mod charfn;
mod ks;
pub mod oracle;
mod stream;

pub use charfn::{empirical_char_function, CharPoint};
pub use ks::{ks_distance, ks_two_sample, ks_two_sample_statistic};
pub use stream::{bernoulli_threshold, SeededStream, StreamFactory};

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::fmt;

/// Which test produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    Ks,
    ChiSquare,
    MeanSigma,
    CharFunction,
    Relative,
    Absolute,
    Trend,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Statistic::Ks => "KS",
            Statistic::ChiSquare => "chi-square",
            Statistic::MeanSigma => "mean-3sigma",
            Statistic::CharFunction => "char-function",
            Statistic::Relative => "relative",
            Statistic::Absolute => "absolute",
            Statistic::Trend => "trend",
        };
        f.write_str(s)
    }
}

/// Outcome of comparing a statistic against a threshold; passes iff
/// `value <= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonVerdict {
    pub name: String,
    pub statistic: Statistic,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub sample_sizes: Vec<usize>,
    pub std_errors: Vec<f64>,
    pub seed: Option<u64>,
    pub note: String,
}

impl ComparisonVerdict {
    pub fn new(name: impl Into<String>, statistic: Statistic, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            value,
            threshold,
            pass: value <= threshold,
            sample_sizes: Vec::new(),
            std_errors: Vec::new(),
            seed: None,
            note: String::new(),
        }
    }

    pub fn with_sizes(mut self, sizes: &[usize]) -> Self {
        self.sample_sizes = sizes.to_vec();
        self
    }

    pub fn with_std_errors(mut self, se: &[f64]) -> Self {
        self.std_errors = se.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Six decimals, or scientific notation for small magnitudes.
struct Short(f64);

impl fmt::Display for Short {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        if v == 0.0 || !v.is_finite() || v.abs() >= 1e-3 {
            write!(f, "{v:.6}")
        } else {
            write!(f, "{v:.3e}")
        }
    }
}

impl fmt::Display for ComparisonVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} ({}): value={} threshold={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            Short(self.value),
            Short(self.threshold)
        )?;
        if !self.sample_sizes.is_empty() {
            write!(f, " n={:?}", self.sample_sizes)?;
        }
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

/// Sample mean, standard deviation and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        Summary {
            n,
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
        }
    }
}

/// `|mean - target| / se <= k`.
pub fn mean_within_sigma(name: &str, xs: &[f64], target: f64, k: f64) -> ComparisonVerdict {
    let s = Summary::of(xs);
    let z = if s.se > 0.0 {
        (s.mean - target).abs() / s.se
    } else if s.mean == target {
        0.0
    } else {
        f64::INFINITY
    };
    ComparisonVerdict::new(name, Statistic::MeanSigma, z, k)
        .with_sizes(&[s.n])
        .with_std_errors(&[s.se])
        .with_note(format!("mean={:.6} target={:.6}", s.mean, target))
}

/// `|estimate - target| / |target| <= tol`.
pub fn relative_within(name: &str, estimate: f64, target: f64, tol: f64) -> ComparisonVerdict {
    let rel = (estimate - target).abs() / target.abs();
    ComparisonVerdict::new(name, Statistic::Relative, rel, tol)
        .with_note(format!("estimate={estimate:.6} target={target:.6}"))
}

/// `|a - b| <= tol`.
pub fn absolute_within(name: &str, a: f64, b: f64, tol: f64) -> ComparisonVerdict {
    ComparisonVerdict::new(name, Statistic::Absolute, (a - b).abs(), tol)
        .with_note(format!("a={a:.10} b={b:.10}"))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let phat = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (phat + z * z / (2.0 * nf)) / denom;
    let half = z * (phat * (1.0 - phat) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sided test that proportion 2 exceeds proportion 1 (pooled z test).
/// The verdict value is `-z`, so it passes when `z >= z_crit`.
pub fn proportion_increase(
    name: &str,
    (s1, n1): (usize, usize),
    (s2, n2): (usize, usize),
    z_crit: f64,
) -> ComparisonVerdict {
    let p1 = s1 as f64 / n1 as f64;
    let p2 = s2 as f64 / n2 as f64;
    let pool = (s1 + s2) as f64 / (n1 + n2) as f64;
    let se = (pool * (1.0 - pool) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = if se > 0.0 { (p2 - p1) / se } else { 0.0 };
    ComparisonVerdict::new(name, Statistic::Trend, -z, -z_crit)
        .with_sizes(&[n1, n2])
        .with_std_errors(&[se])
        .with_note(format!("p1={p1:.5} p2={p2:.5} z={z:.3}"))
}

/// Chi-square goodness of fit of observed counts against cell
/// probabilities. Cells with expected count below 5 are pooled into their
/// neighbour. Passes when the p-value is at least `alpha`.
pub fn chi_square_gof(name: &str, observed: &[u64], probs: &[f64], alpha: f64) -> Result<ComparisonVerdict> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::Parameter("observed and probability vectors must match".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let psum: f64 = probs.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o as f64;
        e_acc += p / psum * total as f64;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::TooFewSamples { got: cells.len(), need: 2 });
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (cells.len() - 1) as f64;
    let dist = ChiSquared::new(df).map_err(|e| Error::Parameter(e.to_string()))?;
    let crit = dist.inverse_cdf(1.0 - alpha);
    let pval = 1.0 - dist.cdf(stat);
    Ok(ComparisonVerdict::new(name, Statistic::ChiSquare, stat, crit)
        .with_sizes(&[total as usize])
        .with_note(format!("df={df} p={pval:.4}")))
}

/// Standard error of a mean from batch means, for serially correlated
/// sequences.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    Summary::of(&means).se
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_pass_iff_value_le_threshold() {
        assert!(ComparisonVerdict::new("a", Statistic::Ks, 0.01, 0.01).pass);
        assert!(!ComparisonVerdict::new("a", Statistic::Ks, 0.011, 0.01).pass);
        assert!(!ComparisonVerdict::new("a", Statistic::Ks, f64::NAN, 0.01).pass);
    }

    #[test]
    fn wilson_contains_phat() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3, "{lo}");
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn chi_square_accepts_exact_counts_and_rejects_skew() {
        let probs = [0.25, 0.25, 0.5];
        let ok = chi_square_gof("ok", &[250, 250, 500], &probs, 0.001).unwrap();
        assert!(ok.pass && ok.value.abs() < 1e-12);
        let bad = chi_square_gof("bad", &[400, 100, 500], &probs, 0.001).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn proportion_trend_direction() {
        let up = proportion_increase("up", (100, 1000), (200, 1000), 1.645);
        assert!(up.pass);
        let down = proportion_increase("down", (200, 1000), (100, 1000), 1.645);
        assert!(!down.pass);
    }

    #[test]
    fn summary_of_constant() {
        let s = Summary::of(&[2.0; 10]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.se, 0.0);
        let v = mean_within_sigma("c", &[2.0; 10], 2.0, 3.0);
        assert!(v.pass);
    }
}
