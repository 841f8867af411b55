use super::{ComparisonVerdict, Statistic};
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 100;

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Sup distance between the empirical CDF of `samples` and `cdf`.
///
/// Ties are handled exactly, so discrete samples compared against a
/// continuous target measure the full jump at each atom.
pub fn ks_distance<F>(name: &str, samples: &[f64], cdf: F, threshold: f64) -> Result<ComparisonVerdict>
where
    F: Fn(f64) -> f64,
{
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: MIN_SAMPLES,
        });
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(ComparisonVerdict::new(name, Statistic::Ks, d, threshold).with_sizes(&[xs.len()]))
}

/// Two-sample sup distance between empirical CDFs.
///
/// Observations censored at a common cap may be passed as `f64::INFINITY`:
/// they count in the denominators but never enter the supremum, which makes
/// this the exact statistic on the uncensored range.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let xa = sorted(a);
    let xb = sorted(b);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        if !x.is_finite() {
            break;
        }
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // one sample exhausted: remaining finite values of the other still move
    // its ECDF while the exhausted one sits at 1
    while i < xa.len() && xa[i].is_finite() {
        i += 1;
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    while j < xb.len() && xb[j].is_finite() {
        j += 1;
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64], threshold: f64) -> Result<ComparisonVerdict> {
    for s in [a, b] {
        if s.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: s.len(),
                need: MIN_SAMPLES,
            });
        }
    }
    let d = ks_two_sample_statistic(a, b);
    Ok(ComparisonVerdict::new(name, Statistic::Ks, d, threshold).with_sizes(&[a.len(), b.len()]))
}
