//! Cat and mouse for the reflected walk on N.
//!
//! The cat goes up with probability `p < 1/2` and otherwise down, holding
//! at 0. Started from 0 it needs about `rho^-n` steps to reach level `n`,
//! so a mouse parked high up is visited on an exponential time scale. Each
//! visit moves the mouse by an independent copy of the free jump `M'`
//! (the jump of the same pair on all of Z), which has mean `-1/rho`.

use crate::chain::{Kernel, ReflectedWalk};
use crate::error::{Error, Result};
use crate::kernel::{cm_step, CatMouseState};
use crate::passage;
use crate::stationary::balance_residual;
use crate::stats::SeededStream;
use num_complex::Complex64;

/// The closed-form invariant measure of the pair as printed for this walk:
/// `rho^x (1-rho)` off the band `|x - y| <= 1`, and on the band
/// `rho^{y-1}(1-rho)(1-p)`, `rho^y (1-rho)`, `rho^{y+1}(1-rho) p` for
/// `x = y-1, y, y+1`.
pub fn nu_reflected_explicit(walk: &ReflectedWalk, x: u64, y: u64) -> f64 {
    let (p, rho) = (walk.p(), walk.rho());
    let g = |k: u64| rho.powi(k as i32) * (1.0 - rho);
    if x + 1 == y {
        g(x) * (1.0 - p)
    } else if x == y {
        g(y)
    } else if x == y + 1 {
        g(x) * p
    } else {
        g(x)
    }
}

/// Invariant measure solving the balance equations. It agrees with
/// [`nu_reflected_explicit`] on every column `y >= 1`; the column `y = 0`
/// differs because of the hold at 0, and there
/// `nu(1,0) = rho (1-rho)` and `nu(x,0) = (2-p) rho^x (1-rho)` for `x >= 2`.
pub fn nu_reflected_exact(walk: &ReflectedWalk, x: u64, y: u64) -> f64 {
    if y > 0 || x == 0 {
        return nu_reflected_explicit(walk, x, y);
    }
    let g = walk.rho().powi(x as i32) * (1.0 - walk.rho());
    if x == 1 {
        g
    } else {
        (2.0 - walk.p()) * g
    }
}

/// Largest balance residual of `nu` over `x <= max_x` and the given columns.
pub fn reflected_balance_residual<N, I>(walk: &ReflectedWalk, nu: N, max_x: u64, columns: I) -> f64
where
    N: Fn(u64, u64) -> f64,
    I: IntoIterator<Item = u64>,
{
    let p = walk.p();
    let prob = |a: usize, b: usize| {
        if b == a + 1 {
            p
        } else if b + 1 == a || (a == 0 && b == 0) {
            1.0 - p
        } else {
            0.0
        }
    };
    let preds = |x: usize| {
        let mut v = vec![x + 1];
        if x > 0 {
            v.push(x - 1);
        } else {
            v.push(0);
        }
        v
    };
    let points: Vec<(usize, usize)> = columns
        .into_iter()
        .flat_map(|y| (0..=max_x).map(move |x| (x as usize, y as usize)))
        .collect();
    balance_residual(points, |a, b| nu(a as u64, b as u64), prob, preds)
}

/// `E_x(T_n)` for the reflected cat, from `m_0 = 1/p` and
/// `m_l = (1 + (1-p) m_{l-1}) / p`, the mean time to climb from `l` to `l+1`.
pub fn expected_up_time(walk: &ReflectedWalk, x: u64, n: u64) -> f64 {
    let (p, q) = (walk.p(), 1.0 - walk.p());
    let mut m = 1.0 / p;
    let mut total = 0.0;
    for l in 0..n {
        if l > 0 {
            m = (1.0 + q * m) / p;
        }
        if l >= x {
            total += m;
        }
    }
    total
}

/// `(1 + rho) / (1 - rho)^2`, the limit of `rho^n E_0(T_n)`.
pub fn up_time_constant(walk: &ReflectedWalk) -> f64 {
    let rho = walk.rho();
    (1.0 + rho) / (1.0 - rho).powi(2)
}

/// Steps for the cat to go from `x` up to `n`, drawn exactly.
pub fn hitting_time_up(walk: &ReflectedWalk, x: u64, n: u64, rng: &mut SeededStream) -> u64 {
    let p = walk.p();
    passage::up_steps(x, n, |_| p, rng)
}

/// Steps for the cat to go from `n` down to 0, by plain stepping.
pub fn hitting_time_down(walk: &ReflectedWalk, n: u64, rng: &mut SeededStream) -> u64 {
    let mut c = n;
    let mut t = 0u64;
    while c > 0 {
        c = walk.step(c, rng);
        t += 1;
    }
    t
}

/// `E(u^tau)` for the time `tau` to go down one level away from 0:
/// `tau` solves `G = q u + p u G^2`.
pub fn descent_gf_exact(walk: &ReflectedWalk, u: f64) -> f64 {
    let (p, q) = (walk.p(), 1.0 - walk.p());
    (1.0 - (1.0 - 4.0 * p * q * u * u).sqrt()) / (2.0 * p * u)
}

/// The same generating function with `u` in place of `u^2` under the root,
/// as printed. Agrees with [`descent_gf_exact`] only at `u = 1`.
pub fn descent_gf_printed(walk: &ReflectedWalk, u: f64) -> f64 {
    let (p, q) = (walk.p(), 1.0 - walk.p());
    (1.0 - (1.0 - 4.0 * p * q * u).sqrt()) / (2.0 * p * u)
}

/// Samples of `u^tau` with `tau` stepped one level down.
pub fn descent_gf_samples(walk: &ReflectedWalk, u: f64, samples: usize, rng: &mut SeededStream) -> Vec<f64> {
    (0..samples)
        .map(|_| {
            let (mut c, mut t) = (1i64, 0i32);
            while c > 0 {
                c += if walk.up(rng) { 1 } else { -1 };
                t += 1;
            }
            u.powi(t)
        })
        .collect()
}

/// Law of the final mouse displacement `M'` of the free pair started
/// together on Z.
#[derive(Clone, Copy, Debug)]
pub struct FreeJumpLaw {
    walk: ReflectedWalk,
}

impl FreeJumpLaw {
    pub fn new(walk: ReflectedWalk) -> Self {
        Self { walk }
    }

    pub fn rho(&self) -> f64 {
        self.walk.rho()
    }

    /// `E(u^{M'}) = rho (1-rho) u^2 / (-rho^2 u^2 + (1+rho) u - 1)`.
    pub fn gf(&self, u: Complex64) -> Complex64 {
        let rho = self.rho();
        rho * (1.0 - rho) * u * u / (-rho * rho * u * u + (1.0 + rho) * u - 1.0)
    }

    /// The generating function rebuilt from the first-separation recursion:
    /// `phi(u) = p q u / (1 - q/u - p^2 u)` for the displacement at the first
    /// time the cat is below the mouse, then a geometric number of
    /// re-meetings, each with probability `rho^2`.
    pub fn gf_from_recursion(&self, u: Complex64) -> Complex64 {
        let (p, q) = (self.walk.p(), 1.0 - self.walk.p());
        let phi = p * q * u / (1.0 - q / u - p * p * u);
        let r2 = self.rho() * self.rho();
        (1.0 - r2) * phi / (1.0 - r2 * phi)
    }

    pub fn mean(&self) -> f64 {
        -1.0 / self.rho()
    }

    /// `E(rho^{-M'/2})`, which is below 1.
    pub fn half_moment(&self) -> f64 {
        self.gf(Complex64::new(self.rho().powf(-0.5), 0.0)).re
    }

    /// Distance below the mouse at which the cat is taken to be gone for
    /// good: climbing back has probability `rho^L < 1e-9`.
    pub fn cutoff(&self) -> i64 {
        (1e-9f64.ln() / self.rho().ln()).ceil() as i64
    }

    /// Steps the free pair from `(0,0)` until the cat is `cutoff` below
    /// the mouse. Returns the displacement and whether the running maximum
    /// of the mouse stayed within one of the running maximum of the cat.
    pub fn sample_stepping(&self, rng: &mut SeededStream) -> (i64, bool) {
        let cutoff = self.cutoff();
        let (mut c, mut m) = (0i64, 0i64);
        let (mut cmax, mut mmax) = (0i64, 0i64);
        let mut bound_ok = true;
        while c - m > -cutoff {
            let together = c == m;
            c += if self.walk.up(rng) { 1 } else { -1 };
            if together {
                m += if self.walk.up(rng) { 1 } else { -1 };
            }
            cmax = cmax.max(c);
            mmax = mmax.max(m);
            bound_ok &= mmax <= cmax + 1;
        }
        (m, bound_ok)
    }

    /// Draws `M'` as `1 + G` independent copies of the displacement at first
    /// separation, `G` geometric with continuation probability `rho^2`.
    pub fn sample_renewal(&self, rng: &mut SeededStream) -> i64 {
        let r2 = self.rho() * self.rho();
        let mut total = 0i64;
        loop {
            loop {
                let cat_up = self.walk.up(rng);
                let mouse_up = self.walk.up(rng);
                if mouse_up {
                    total += 1;
                    if !cat_up {
                        break;
                    }
                } else {
                    total -= 1;
                }
            }
            if rng.open01() >= r2 {
                return total;
            }
        }
    }
}

/// One draw of `W = sum_k rho^{-S_k} E_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WSample {
    pub value: f64,
    pub terms: usize,
    /// Bound on `E sqrt(tail) / sqrt(value)` when the sum was cut.
    pub tail_bound: f64,
}

/// `W` with `S` the walk of free jumps and `E_k` exponential with mean
/// `(1+rho)/(1-rho)^2`, the limit law of `rho^n T_n`. The sum is cut once
/// `E(sqrt(tail) | S_K)`, bounded through `E(rho^{-M'/2}) < 1`, falls below
/// `rel_tail * sqrt(partial sum)`.
pub fn sample_w(law: &FreeJumpLaw, rel_tail: f64, rng: &mut SeededStream) -> WSample {
    let rho = law.rho();
    let mean_e = (1.0 + rho) / (1.0 - rho).powi(2);
    let delta = law.half_moment();
    let sqrt_e = (mean_e * std::f64::consts::PI).sqrt() / 2.0;
    let factor = sqrt_e * delta / (1.0 - delta);
    let mut s = 0i64;
    let mut value = 0.0;
    let mut terms = 0;
    loop {
        value += rho.powi(-s as i32) * rng.exp(1.0 / mean_e);
        terms += 1;
        let bound = factor * rho.powf(-s as f64 / 2.0) / value.sqrt();
        if bound < rel_tail {
            return WSample {
                value,
                terms,
                tail_bound: bound,
            };
        }
        s += law.sample_renewal(rng);
    }
}

/// One replica of the pair started with the mouse at `n` and the cat at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseRecord {
    /// First time the mouse is at 0.
    pub h0: u64,
    /// First time the cat is back at 0 after the first meeting.
    pub t1: u64,
    /// Mouse displacement at `t1`.
    pub first_jump: i64,
    /// Mouse level at each requested time, `n` at time 0.
    pub profile: Vec<u64>,
    /// Cycles (cat climbs to the mouse) before `h0`.
    pub cycles: u64,
}

/// Climbs are drawn with the level-crossing sampler; everything from a
/// meeting until the cat is back at 0 is stepped, so the mouse path is
/// exact. `times` must be nondecreasing.
pub fn collapse_replica(walk: &ReflectedWalk, n: u64, times: &[u64], rng: &mut SeededStream) -> CollapseRecord {
    assert!(n >= 1);
    let mut profile = Vec::with_capacity(times.len());
    let (mut c, mut m) = (0u64, n);
    let mut clock = 0u64;
    let mut t1 = None;
    let mut first_jump = 0;
    let mut cycles = 0;
    // record the mouse at every requested time before `until`
    let fill = |profile: &mut Vec<u64>, until: u64, m: u64| {
        while profile.len() < times.len() && times[profile.len()] < until {
            profile.push(m);
        }
    };
    loop {
        let climb = hitting_time_up(walk, c, m, rng);
        fill(&mut profile, clock + climb, m);
        clock += climb;
        c = m;
        cycles += 1;
        loop {
            fill(&mut profile, clock + 1, m);
            let s = cm_step(CatMouseState::new(c, m), walk, rng);
            c = s.cat;
            m = s.mouse;
            clock += 1;
            if m == 0 {
                fill(&mut profile, u64::MAX, 0);
                return CollapseRecord {
                    h0: clock,
                    t1: t1.unwrap_or(clock),
                    first_jump: t1.map_or(-(n as i64), |_| first_jump),
                    profile,
                    cycles,
                };
            }
            if c == 0 {
                if t1.is_none() {
                    t1 = Some(clock);
                    first_jump = m as i64 - n as i64;
                }
                break;
            }
        }
    }
}

/// Whether the mouse reaches `n/2` at some step in `[from, to]`, pair
/// started at `(0,0)`.
pub fn oscillation_replica(walk: &ReflectedWalk, n: u64, from: u64, to: u64, rng: &mut SeededStream) -> bool {
    let target = n.div_ceil(2);
    let mut s = CatMouseState::new(0u64, 0u64);
    for k in 0..=to {
        if k >= from && s.mouse >= target {
            return true;
        }
        if k == to {
            break;
        }
        s = cm_step(s, walk, rng);
    }
    false
}

/// Expected chain steps for `replicas` climbs to level `n`.
pub fn expected_climb_steps(walk: &ReflectedWalk, n: u64, replicas: u64) -> f64 {
    expected_up_time(walk, 0, n) * replicas as f64
}

/// Refuses work whose declared expected step count exceeds `budget`.
pub fn check_budget(expected: f64, budget: f64) -> Result<()> {
    if expected > budget {
        Err(Error::Budget { expected, budget })
    } else {
        Ok(())
    }
}
