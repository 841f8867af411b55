//! Exact upward first-passage sampling for birth-death chains.
//!
//! Reaching `n` from `x < n` takes exponentially many steps in the chains
//! studied here, but the path can be summarised level by level. Each exit
//! from level `l` is an independent coin (up with probability `p_l`), and
//! the last exit from every level below `n` is an up-move. Given the number
//! `U_l` of up-crossings `l -> l+1`, the number of down-moves from `l` is the
//! number of failures before the `U_l`-th success, and each of those must
//! be undone by an up-crossing `l-1 -> l`. Working down from `U_{n-1} = 1`
//! draws the whole visit profile with one negative binomial per level.
//!
//! At level 0 a "down" move is whatever the chain does instead of going up
//! (the reflected walk holds there); it counts as another visit of level 0.

use crate::stats::SeededStream;
use rand_distr::{Distribution, Gamma, Poisson};

/// Failures before the `r`-th success of a coin with success probability
/// `p`, drawn as a Poisson count with a Gamma intensity.
pub fn negative_binomial(r: u64, p: f64, rng: &mut SeededStream) -> u64 {
    if r == 0 || p >= 1.0 {
        return 0;
    }
    let lambda = Gamma::new(r as f64, (1.0 - p) / p).expect("valid gamma").sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng) as u64
}

/// Visits to each level `0..n` before the first hit of `n` from `x`.
/// `up(l)` is the probability of moving up from level `l`.
pub fn up_visits<F: Fn(u64) -> f64>(x: u64, n: u64, up: F, rng: &mut SeededStream) -> Vec<u64> {
    assert!(x < n, "upward passage needs x < n");
    let mut visits = vec![0u64; n as usize];
    let mut ups = 1u64;
    for level in (0..n).rev() {
        if ups == 0 {
            break;
        }
        let downs = negative_binomial(ups, up(level), rng);
        visits[level as usize] = ups + downs;
        ups = downs + u64::from(level >= 1 && level - 1 >= x);
    }
    visits
}

/// Steps of a discrete-time chain from `x` until it first hits `n`.
pub fn up_steps<F: Fn(u64) -> f64>(x: u64, n: u64, up: F, rng: &mut SeededStream) -> u64 {
    up_visits(x, n, up, rng).iter().sum()
}

/// Time of a continuous-time chain from `x` until it first hits `n`; the
/// holding rate at level `l` is `rate(l)`.
pub fn up_time<F: Fn(u64) -> f64, R: Fn(u64) -> f64>(x: u64, n: u64, up: F, rate: R, rng: &mut SeededStream) -> f64 {
    up_visits(x, n, up, rng)
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .map(|(l, &v)| Gamma::new(v as f64, 1.0 / rate(l as u64)).expect("valid gamma").sample(rng))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    #[test]
    fn reflected_walk_passage_matches_stepping() {
        let p = 0.3;
        let mut a = SeededStream::new(1, 0);
        let mut b = SeededStream::new(1, 1);
        for (x, n) in [(0u64, 6u64), (2, 5)] {
            let fast: Vec<f64> = (0..20_000).map(|_| up_steps(x, n, |_| p, &mut a) as f64).collect();
            let slow: Vec<f64> = (0..20_000)
                .map(|_| {
                    let (mut c, mut t) = (x, 0u64);
                    while c != n {
                        c = if b.open01() < p { c + 1 } else { c.saturating_sub(1) };
                        t += 1;
                    }
                    t as f64
                })
                .collect();
            let v = ks_two_sample("reflected T_n", &fast, &slow, 0.02).unwrap();
            assert!(v.pass, "{v}");
        }
    }

    #[test]
    fn birth_death_time_matches_event_simulation() {
        let rho = 1.5;
        let up = |l: u64| rho / (rho + l as f64);
        let rate = |l: u64| rho + l as f64;
        let mut a = SeededStream::new(2, 0);
        let mut b = SeededStream::new(2, 1);
        let fast: Vec<f64> = (0..20_000).map(|_| up_time(1, 5, up, rate, &mut a)).collect();
        let slow: Vec<f64> = (0..20_000)
            .map(|_| {
                let (mut c, mut t) = (1u64, 0.0);
                while c != 5 {
                    t += b.exp(rate(c));
                    c = if b.open01() < up(c) { c + 1 } else { c - 1 };
                }
                t
            })
            .collect();
        let v = ks_two_sample("M/M/inf T_5", &fast, &slow, 0.02).unwrap();
        assert!(v.pass, "{v}");
    }

    #[test]
    fn negative_binomial_mean() {
        let mut rng = SeededStream::new(3, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| negative_binomial(3, 0.4, &mut rng) as f64).sum::<f64>() / n as f64;
        // 3 (1 - p) / p = 4.5
        assert!((mean - 4.5).abs() < 0.05, "{mean}");
    }
}
