//! The pair on Z.
//!
//! After a separation the two are at distance 2 and only the cat moves, so
//! the apart phase is a first-passage time of the symmetric walk from 2 to 0.
//! Those passage times are drawn exactly by inverting their distribution
//! function, which is available in closed form through the reflection
//! principle: `P(T_a > m) = P(-a <= S_m < a)`.

use crate::error::{Error, Result};
use crate::kernel::CycleRecord;
use crate::stats::SeededStream;
use rand::RngCore;
use std::sync::OnceLock;

const TABLE_LEN: usize = 1 << 16;

/// `P(S_m = 0)` for even `m`, `S` the symmetric walk from 0.
fn central_even(m: u64) -> f64 {
    debug_assert!(m % 2 == 0);
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        // c(2j) = c(2j-2) (2j-1) / (2j)
        let mut v = Vec::with_capacity(TABLE_LEN / 2 + 1);
        v.push(1.0);
        for j in 1..=TABLE_LEN / 2 {
            let prev = v[j - 1];
            v.push(prev * (2 * j - 1) as f64 / (2 * j) as f64);
        }
        v
    });
    let j = (m / 2) as usize;
    if j < t.len() {
        return t[j];
    }
    // ln(C(2j,j) / 4^j), Stirling series
    let jf = j as f64;
    let inv = 1.0 / jf;
    let inv2 = inv * inv;
    let ln = -0.5 * (std::f64::consts::PI * jf).ln() - inv / 8.0
        + inv * inv2 / 192.0
        - inv * inv2 * inv2 / 640.0
        + 17.0 * inv * inv2 * inv2 * inv2 / 14336.0;
    ln.exp()
}

/// `P(T_a > m)` for the first passage from `a` to 0, `a` in {1, 2}.
pub fn passage_survival(a: u32, m: u64) -> f64 {
    let odd_term = |m: u64| central_even(m - 1) * m as f64 / (m + 1) as f64;
    match (a, m % 2) {
        (1, 0) => central_even(m),
        (1, _) => odd_term(m),
        (2, 0) => central_even(m) * (1.0 + m as f64 / (m + 2) as f64),
        (2, _) => 2.0 * odd_term(m),
        _ => panic!("passage_survival supports a = 1 or 2"),
    }
}

/// Exact first-passage time of the symmetric walk from `a` to 0, or `None`
/// if it exceeds `cap`.
pub fn sample_passage(a: u32, cap: u64, rng: &mut SeededStream) -> Option<u64> {
    let u = rng.open01();
    if passage_survival(a, cap) >= u {
        return None;
    }
    // smallest m with S(m) < u; S is nonincreasing, S(a - 1) = 1
    let (mut lo, mut hi) = (a as u64 - 1, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passage_survival(a, mid) < u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Geometric together-phase length, `P(G >= k) = 2^{1-k}`, and the mouse
/// displacement accumulated over it. Each step spends one bit on the cat and
/// one on the mouse.
fn together_phase(rng: &mut SeededStream) -> (u64, i64) {
    let mut g = 0u64;
    let mut disp = 0i64;
    loop {
        let mut word = rng.next_u64();
        for _ in 0..32 {
            let cat = word & 1;
            let mouse = (word >> 1) & 1;
            word >>= 2;
            g += 1;
            disp += if mouse == 1 { 1 } else { -1 };
            if cat != mouse {
                return (g, disp);
            }
        }
    }
}

/// Cycles of the pair on Z started together at the origin. Apart phases
/// longer than `apart_cap` end the run with a censored trailing record.
pub fn line_cycles(n_cycles: usize, apart_cap: u64, rng: &mut SeededStream) -> Vec<CycleRecord<i64>> {
    let mut out = Vec::with_capacity(n_cycles);
    let mut mouse = 0i64;
    while out.len() < n_cycles {
        let (g, d) = together_phase(rng);
        let start = mouse;
        mouse += d;
        let (apart, complete) = match sample_passage(2, apart_cap, rng) {
            Some(t) => (t, true),
            None => (apart_cap, false),
        };
        out.push(CycleRecord {
            together_duration: g,
            apart_duration: apart,
            mouse_start: start,
            mouse_end: mouse,
            complete,
        });
        if !complete {
            break;
        }
    }
    out
}

/// `u_N = #{l : sum_{k<=l} (2 + T_{2,k}) < N}` at each of the horizons,
/// which must be nondecreasing.
pub fn renewal_counts(horizons: &[u64], rng: &mut SeededStream) -> Vec<u64> {
    let mut out = Vec::with_capacity(horizons.len());
    let last = horizons.last().copied().unwrap_or(0);
    let mut elapsed = 0u64;
    let mut count = 0u64;
    let mut h = 0;
    loop {
        let next = if elapsed + 2 < last {
            sample_passage(2, last - elapsed - 2, rng).map(|t| elapsed + 2 + t)
        } else {
            None
        };
        let end = next.unwrap_or(u64::MAX);
        while h < horizons.len() && end >= horizons[h] {
            out.push(count);
            h += 1;
        }
        if h == horizons.len() {
            return out;
        }
        elapsed = end;
        count += 1;
    }
}

/// Samples of `u_{floor(n t)} / sqrt(n)` for each `t` in the grid.
pub fn meeting_counter(n: u64, t_grid: &[f64], rng: &mut SeededStream) -> Result<Vec<f64>> {
    if n < 10_000 {
        return Err(Error::Parameter(format!("meeting counter needs n >= 1e4, got {n}")));
    }
    let horizons = horizons(n, t_grid)?;
    let sq = (n as f64).sqrt();
    Ok(renewal_counts(&horizons, rng).into_iter().map(|c| c as f64 / sq).collect())
}

fn horizons(n: u64, t_grid: &[f64]) -> Result<Vec<u64>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Parameter("time grid must be nonnegative and sorted".into()));
    }
    Ok(t_grid.iter().map(|t| (n as f64 * t).floor() as u64).collect())
}

/// One replica of the pair on Z from `(0, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineRun {
    /// Mouse position at each horizon.
    pub mouse: Vec<i64>,
    /// Mouse steps taken by each horizon.
    pub kappa: Vec<u64>,
    /// Completed cycles by each horizon.
    pub cycles: Vec<u64>,
    pub up_moves: u64,
    pub down_moves: u64,
    /// The bracket `sum_{l<=nu} G_l <= kappa <= sum_{l<=nu+1} G_l` held at
    /// every horizon.
    pub kappa_bracket_ok: bool,
}

pub fn simulate_line_pair(horizons: &[u64], rng: &mut SeededStream) -> LineRun {
    let last = horizons.last().copied().unwrap_or(0);
    let mut run = LineRun {
        mouse: Vec::with_capacity(horizons.len()),
        kappa: Vec::with_capacity(horizons.len()),
        cycles: Vec::with_capacity(horizons.len()),
        up_moves: 0,
        down_moves: 0,
        kappa_bracket_ok: true,
    };
    let (mut time, mut mouse, mut kappa, mut cycles) = (0u64, 0i64, 0u64, 0u64);
    let mut g_sum = 0u64;
    let mut h = 0;
    // replay a together phase step by step so horizons inside it are exact
    while h < horizons.len() {
        let mut word = rng.next_u64();
        let mut bits = 32;
        let mut g = 0u64;
        loop {
            while h < horizons.len() && horizons[h] == time {
                run.mouse.push(mouse);
                run.kappa.push(kappa);
                run.cycles.push(cycles);
                // inside a together phase: kappa = (sum of earlier G) + g
                run.kappa_bracket_ok &= g_sum <= kappa;
                h += 1;
            }
            if h == horizons.len() {
                return run;
            }
            if bits == 0 {
                word = rng.next_u64();
                bits = 32;
            }
            let cat = word & 1;
            let mv = (word >> 1) & 1;
            word >>= 2;
            bits -= 1;
            time += 1;
            kappa += 1;
            g += 1;
            if mv == 1 {
                mouse += 1;
                run.up_moves += 1;
            } else {
                mouse -= 1;
                run.down_moves += 1;
            }
            if cat != mv {
                break;
            }
        }
        let g_prev = g_sum;
        g_sum += g;
        let t2 = sample_passage(2, last.saturating_sub(time).max(1), rng);
        let end = t2.map_or(u64::MAX, |t| time + t);
        while h < horizons.len() && horizons[h] < end {
            run.mouse.push(mouse);
            run.kappa.push(kappa);
            run.cycles.push(cycles);
            // apart phase of cycle cycles + 1: kappa = sum_{l<=cycles+1} G_l
            run.kappa_bracket_ok &= g_prev <= kappa && kappa <= g_sum;
            h += 1;
        }
        time = end;
        cycles += 1;
    }
    run
}

/// Samples of `M_{floor(n t)} / n^{1/4}` for each `t`.
pub fn scaling_1d(n: u64, t_grid: &[f64], rng: &mut SeededStream) -> Result<(Vec<f64>, LineRun)> {
    let hs = horizons(n, t_grid)?;
    let run = simulate_line_pair(&hs, rng);
    let scale = (n as f64).powf(0.25);
    Ok((run.mouse.iter().map(|&m| m as f64 / scale).collect(), run))
}

/// `E(u^{T_1}) = (1 - sqrt(1 - u^2)) / u`.
pub fn passage_gf_exact(u: f64) -> f64 {
    (1.0 - (1.0 - u * u).sqrt()) / u
}

/// Monte Carlo values of `u^{T_1}` by plain stepping of the walk, stopped
/// once `u^T < 1e-18` (contribution then set to 0).
pub fn passage_gf_samples(u: f64, samples: usize, rng: &mut SeededStream) -> Result<Vec<f64>> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Parameter(format!("u must lie in (0,1), got {u}")));
    }
    let cutoff = (1e-18f64.ln() / u.ln()).ceil() as u64;
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut x = 1i64;
        let mut t = 0u64;
        'walk: loop {
            let mut word = rng.next_u64();
            for _ in 0..64 {
                x += if word & 1 == 1 { 1 } else { -1 };
                word >>= 1;
                t += 1;
                if x == 0 || t >= cutoff {
                    break 'walk;
                }
            }
        }
        out.push(if x == 0 { u.powf(t as f64) } else { 0.0 });
    }
    Ok(out)
}
