//! Exit position of the plane walk from the centre of a square.
//!
//! The walk started at the centre of `[-k, k]^2` leaves through the four
//! sides with equal probability; on a side the exit coordinate `j` in
//! `(-k, k)` has the discrete harmonic-measure law
//!
//! `H(j) = sum_{m odd} 2 sin(m pi/2) sin(m pi (j+k)/(2k)) / (k cosh(k mu_m))`,
//! normalised to one side, with `cosh mu_m = 2 - cos(m pi/(2k))`. Terms decay
//! like `exp(-m pi/2)` so a few dozen suffice. Jumping straight to the exit
//! point is exact as long as the closed square holds no target site except
//! possibly on its boundary.

use crate::stats::SeededStream;
use rand::RngCore;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Largest table is for `k = 2^MAX_POW`.
pub const MAX_POW: u32 = 16;

struct Table {
    /// Cumulative law of `j + k - 1` for `j` in `-k+1..k`.
    cdf: Vec<f64>,
}

fn build(k: usize) -> Table {
    let kf = k as f64;
    let mut terms = Vec::new();
    let mut m = 1usize;
    while m < 2 * k {
        let lambda = m as f64 * PI / (2.0 * kf);
        let mu = (2.0 - lambda.cos()).acosh();
        let weight = 2.0 * (m as f64 * PI / 2.0).sin() / (kf * (kf * mu).cosh());
        if weight.abs() < 1e-22 {
            break;
        }
        terms.push((lambda, weight));
        m += 2;
    }
    let mut pmf: Vec<f64> = (1..2 * k)
        .map(|s| {
            terms
                .iter()
                .map(|&(lambda, w)| w * (lambda * s as f64).sin())
                .sum::<f64>()
                .max(0.0)
        })
        .collect();
    let total: f64 = pmf.iter().sum();
    let mut acc = 0.0;
    for p in pmf.iter_mut() {
        acc += *p / total;
        *p = acc;
    }
    Table { cdf: pmf }
}

fn tables() -> &'static [Table] {
    static T: OnceLock<Vec<Table>> = OnceLock::new();
    T.get_or_init(|| (0..=MAX_POW).map(|p| build(1 << p)).collect())
}

/// Offset of the exit point from the centre of a square of half-side
/// `2^pow`.
pub fn sample_exit(pow: u32, rng: &mut SeededStream) -> (i64, i64) {
    let k = 1i64 << pow;
    let t = &tables()[pow as usize];
    let u = rng.open01();
    let i = t.cdf.partition_point(|&c| c < u).min(t.cdf.len() - 1);
    let j = i as i64 - k + 1;
    match rng.next_u32() & 3 {
        0 => (k, j),
        1 => (-k, j),
        2 => (j, k),
        _ => (j, -k),
    }
}

/// Exact single-side probability of exit coordinate `j` for half-side `k`.
pub fn exit_pmf(k: usize, j: i64) -> f64 {
    let kf = k as f64;
    let s = (j + k as i64) as f64;
    let mut acc = 0.0;
    let mut m = 1usize;
    while m < 2 * k {
        let lambda = m as f64 * PI / (2.0 * kf);
        let mu = (2.0 - lambda.cos()).acosh();
        acc += 2.0 * (m as f64 * PI / 2.0).sin() * (lambda * s).sin() / (kf * (kf * mu).cosh());
        m += 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_is_one_step() {
        assert!((exit_pmf(1, 0) - 1.0).abs() < 1e-15);
        let mut rng = SeededStream::new(1, 0);
        for _ in 0..100 {
            let (x, y) = sample_exit(0, &mut rng);
            assert_eq!(x.abs() + y.abs(), 1);
        }
    }

    #[test]
    fn side_law_sums_to_one_and_matches_simulation() {
        for k in [2usize, 4, 16] {
            let total: f64 = (-(k as i64) + 1..k as i64).map(|j| exit_pmf(k, j)).sum();
            assert!((total - 1.0).abs() < 1e-12, "k={k} total={total}");
        }
        // plain stepping from the centre of the half-side-4 square
        let mut rng = SeededStream::new(2, 0);
        let mut counts = vec![0u64; 7];
        let n = 200_000;
        for _ in 0..n {
            let (mut x, mut y) = (0i64, 0i64);
            while x.abs() < 4 && y.abs() < 4 {
                match rng.next_u32() & 3 {
                    0 => x += 1,
                    1 => x -= 1,
                    2 => y += 1,
                    _ => y -= 1,
                }
            }
            let j = if x.abs() == 4 { y } else { x };
            counts[(j + 3) as usize] += 1;
        }
        let probs: Vec<f64> = (-3..=3).map(|j| exit_pmf(4, j)).collect();
        let v = crate::stats::chi_square_gof("exit", &counts, &probs, 0.001).unwrap();
        assert!(v.pass, "{v}");
    }
}
