//! The pair on Z^2.
//!
//! Visits of the pair to `E x E`, taken relative to the site where they
//! were last together, form the 16-state chain `Q_R`. Its diagonal mass sets
//! the constant of the bilateral-exponential limit.

use super::dirichlet::ReturnKernel;
use super::exit::{sample_exit, MAX_POW};
use super::E;
use crate::chain::{FiniteChain, Measure};
use crate::error::Result;
use crate::stats::SeededStream;
use rand::RngCore;
use rand_distr::{Binomial, Distribution};

/// `Q_R` state index for cat at `E[e]` and mouse at `E[g]`.
#[inline]
pub fn relative_index(e: usize, g: usize) -> usize {
    4 * e + g
}

#[derive(Clone, Debug)]
pub struct RelativeChain {
    pub kernel: FiniteChain,
    pub mu_r: Measure,
    pub diag_mass: f64,
}

impl RelativeChain {
    /// `sqrt(3 pi) / (4 sqrt(mu_R(D)))`.
    pub fn alpha0(&self) -> f64 {
        (3.0 * std::f64::consts::PI).sqrt() / (4.0 * self.diag_mass.sqrt())
    }

    /// Largest `|mu_R Q_R - mu_R|`.
    pub fn stationarity_defect(&self) -> f64 {
        let mu = self.mu_r.weights();
        (0..16)
            .map(|j| ((0..16).map(|i| mu[i] * self.kernel.p(i, j)).sum::<f64>() - mu[j]).abs())
            .fold(0.0, f64::max)
    }
}

pub fn build_relative_chain(r: &ReturnKernel) -> Result<RelativeChain> {
    let mut rows = vec![vec![0.0; 16]; 16];
    for e in 0..4 {
        for g in 0..4 {
            let row = &mut rows[relative_index(e, g)];
            if e == g {
                for h in (0..4).filter(|&h| h != e) {
                    row[relative_index(e, h)] = 1.0 / 3.0;
                }
            } else {
                for f in 0..4 {
                    row[relative_index(f, g)] = r.r(e, f);
                }
            }
        }
    }
    let kernel = FiniteChain::with_loops(rows)?;
    let mu_r = kernel.stationary()?;
    let diag_mass = (0..4).map(|e| mu_r.weights()[relative_index(e, e)]).sum();
    Ok(RelativeChain { kernel, mu_r, diag_mass })
}

/// The eight symmetries of the square as maps on indices of `E`.
pub fn dihedral_group() -> Vec<[usize; 4]> {
    let maps: [fn((i64, i64)) -> (i64, i64); 8] = [
        |(x, y)| (x, y),
        |(x, y)| (-y, x),
        |(x, y)| (-x, -y),
        |(x, y)| (y, -x),
        |(x, y)| (x, -y),
        |(x, y)| (-x, y),
        |(x, y)| (y, x),
        |(x, y)| (-y, -x),
    ];
    maps.iter()
        .map(|m| {
            let mut perm = [0; 4];
            for (i, &v) in E.iter().enumerate() {
                perm[i] = E.iter().position(|&w| w == m(v)).unwrap();
            }
            perm
        })
        .collect()
}

/// Beyond this distance the return point is taken uniform on `E`.
pub const ESCAPE_RADIUS: i64 = 1 << 20;

fn distance_to_e(p: (i64, i64)) -> i64 {
    E.iter()
        .map(|&(a, b)| (p.0 - a).abs().max((p.1 - b).abs()))
        .min()
        .unwrap()
}

fn single_step(p: (i64, i64), rng: &mut SeededStream) -> (i64, i64) {
    let d = E[(rng.next_u32() & 3) as usize];
    (p.0 + d.0, p.1 + d.1)
}

/// Index in `E` of the next visit to `E` of a walk started at `start`,
/// strictly after time 0.
pub fn next_visit(start: (i64, i64), rng: &mut SeededStream) -> usize {
    let mut p = single_step(start, rng);
    loop {
        if let Some(i) = E.iter().position(|&e| e == p) {
            return i;
        }
        let d = distance_to_e(p);
        if d > ESCAPE_RADIUS {
            return (rng.next_u32() & 3) as usize;
        }
        let pow = (63 - d.leading_zeros()).min(MAX_POW);
        let (dx, dy) = sample_exit(pow, rng);
        p = (p.0 + dx, p.1 + dy);
    }
}

/// Counts of the next visit from `e1` over `excursions` runs, indexed by
/// `E`.
pub fn return_counts(excursions: u64, rng: &mut SeededStream) -> [u64; 4] {
    let mut c = [0u64; 4];
    for _ in 0..excursions {
        c[next_visit(E[0], rng)] += 1;
    }
    c
}

/// Diagonal indicators along a run of the pair restricted to its `E x E`
/// visits.
pub fn relative_visits(visits: usize, rng: &mut SeededStream) -> Vec<bool> {
    let mut out = Vec::with_capacity(visits);
    let (mut cat, mut mouse) = (0usize, 1usize);
    while out.len() < visits {
        let diag = cat == mouse;
        out.push(diag);
        if diag {
            // both step from the common site until they split; the site they
            // leave becomes the new origin
            loop {
                let w = rng.next_u32();
                let (c, m) = ((w & 3) as usize, ((w >> 2) & 3) as usize);
                if c != m {
                    cat = c;
                    mouse = m;
                    break;
                }
            }
        } else {
            cat = next_visit(E[cat], rng);
        }
    }
    out
}

/// Rotated coordinates `u = x + y`, `v = x - y` are independent simple
/// walks, so an apart stretch of `K` cat steps is two binomials.
#[derive(Clone, Copy, Debug)]
struct Rotated {
    u: i64,
    v: i64,
}

impl Rotated {
    fn x(&self) -> i64 {
        (self.u + self.v) / 2
    }
}

fn signed_binomial(k: u64, rng: &mut SeededStream) -> i64 {
    if k < 64 {
        let bits = rng.next_u64() & ((1u64 << k) - 1);
        return 2 * bits.count_ones() as i64 - k as i64;
    }
    let b = Binomial::new(k, 0.5).expect("valid binomial");
    2 * b.sample(rng) as i64 - k as i64
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaneRun {
    /// First mouse coordinate at each horizon.
    pub mouse_x: Vec<i64>,
    /// Mouse steps taken by each horizon.
    pub mouse_steps: Vec<u64>,
}

/// The pair started together at the origin, observed at nondecreasing
/// horizons.
pub fn plane_run(horizons: &[u64], rng: &mut SeededStream) -> PlaneRun {
    let mut out = PlaneRun {
        mouse_x: Vec::with_capacity(horizons.len()),
        mouse_steps: Vec::with_capacity(horizons.len()),
    };
    let mut kappa = 0u64;
    let mut cat = Rotated { u: 0, v: 0 };
    let mut mouse = cat;
    let mut time = 0u64;
    let mut h = 0;
    while h < horizons.len() {
        while h < horizons.len() && horizons[h] == time {
            out.mouse_x.push(mouse.x());
            out.mouse_steps.push(kappa);
            h += 1;
        }
        if h == horizons.len() {
            break;
        }
        let remaining = horizons[h] - time;
        let (du, dv) = (mouse.u - cat.u, mouse.v - cat.v);
        if du == 0 && dv == 0 {
            let w = rng.next_u32();
            let su = if w & 1 == 1 { 1 } else { -1 };
            let sv = if w & 2 != 0 { 1 } else { -1 };
            let tu = if w & 4 != 0 { 1 } else { -1 };
            let tv = if w & 8 != 0 { 1 } else { -1 };
            cat.u += su;
            cat.v += sv;
            mouse.u += tu;
            mouse.v += tv;
            time += 1;
            kappa += 1;
        } else {
            // the cat needs at least max(|du|, |dv|) steps to meet the mouse
            let k = (du.abs().max(dv.abs()) as u64 - 1).clamp(1, remaining);
            cat.u += signed_binomial(k, rng);
            cat.v += signed_binomial(k, rng);
            time += k;
        }
    }
    out
}

/// `M_{floor(e^{n t})} / sqrt(n)`, first coordinate.
pub fn scaling_2d_marginal(n: f64, t: f64, rng: &mut SeededStream) -> f64 {
    let horizon = (n * t).exp().floor() as u64;
    plane_run(&[horizon], rng).mouse_x[0] as f64 / n.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Kernel, PlaneWalk};

    fn kernel() -> ReturnKernel {
        ReturnKernel {
            r_same: 0.4,
            r_opposite: 0.2,
            r_perp: 0.2,
        }
    }

    #[test]
    fn diagonal_rows_split_in_thirds() {
        let q = build_relative_chain(&kernel()).unwrap();
        for e in 0..4 {
            let row = q.kernel.row(relative_index(e, e));
            assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 3);
            assert!(row.iter().filter(|&&v| v != 0.0).all(|&v| v == 1.0 / 3.0));
        }
        assert!(q.stationarity_defect() < 1e-10);
        assert!(q.diag_mass > 0.0 && q.diag_mass < 1.0);
    }

    #[test]
    fn mu_r_is_dihedral_invariant() {
        let q = build_relative_chain(&kernel()).unwrap();
        let mu = q.mu_r.weights();
        let group = dihedral_group();
        assert_eq!(group.len(), 8);
        for g in group {
            for e in 0..4 {
                for h in 0..4 {
                    let a = mu[relative_index(e, h)];
                    let b = mu[relative_index(g[e], g[h])];
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn next_visit_matches_plain_stepping_near_e() {
        // compare the first-hit law from e1 with a plain walk cut at a large
        // radius; both should put the most mass back on e1
        let mut a = SeededStream::new(4, 0);
        let mut b = SeededStream::new(4, 1);
        let n = 20_000;
        let fast = return_counts(n, &mut a);
        let mut slow = [0u64; 4];
        for _ in 0..n {
            let mut p = PlaneWalk.step(E[0], &mut b);
            let mut steps = 0;
            loop {
                if let Some(i) = E.iter().position(|&e| e == p) {
                    slow[i] += 1;
                    break;
                }
                steps += 1;
                if steps > 1_000_000 {
                    slow[(b.next_u32() & 3) as usize] += 1;
                    break;
                }
                p = PlaneWalk.step(p, &mut b);
            }
        }
        for i in 0..4 {
            let (pa, pb) = (fast[i] as f64 / n as f64, slow[i] as f64 / n as f64);
            let se = (pa * (1.0 - pa) / n as f64).sqrt() * 2f64.sqrt();
            assert!((pa - pb).abs() < 4.0 * se, "{i}: {pa} vs {pb}");
        }
    }

    #[test]
    fn plane_pair_matches_plain_stepping() {
        use crate::kernel::{cm_step, CatMouseState};
        let mut a = SeededStream::new(5, 0);
        let mut b = SeededStream::new(5, 1);
        let horizon = 2000u64;
        let fast: Vec<f64> = (0..5000).map(|_| plane_run(&[horizon], &mut a).mouse_x[0] as f64).collect();
        let slow: Vec<f64> = (0..5000)
            .map(|_| {
                let mut s = CatMouseState::new((0i64, 0i64), (0, 0));
                for _ in 0..horizon {
                    s = cm_step(s, &PlaneWalk, &mut b);
                }
                s.mouse.0 as f64
            })
            .collect();
        let v = crate::stats::ks_two_sample("plane mouse", &fast, &slow, 0.04).unwrap();
        assert!(v.pass, "{v}");
    }
}
