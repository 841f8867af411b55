//! Continuous-time cat and mouse, with the M/M/inf queue as the main case.
//!
//! A state `(x, y)` holds for an exponential time with the cat's rate, then
//! the embedded pair kernel moves it. The jump sequence is therefore the
//! discrete cat-and-mouse chain of the embedded kernel.

use crate::chain::{MmInf, RateKernel};
use crate::error::{Error, Result};
use crate::kernel::{cm_step, CatMouseState};
use crate::passage::up_time;
use crate::stats::SeededStream;

/// One jump of the pair. The holding time is drawn before the cat's and
/// mouse's moves.
pub fn ct_step<K: RateKernel>(
    s: CatMouseState<K::State>,
    chain: &K,
    rng: &mut SeededStream,
) -> (f64, CatMouseState<K::State>) {
    let hold = rng.exp(chain.rate(s.cat));
    let mut next = cm_step(s, chain, rng);
    next.clock = s.clock + hold;
    (hold, next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<S> {
    pub start: f64,
    pub hold: f64,
    pub cat: S,
    pub mouse: S,
}

impl<S: PartialEq> Segment<S> {
    pub fn together(&self) -> bool {
        self.cat == self.mouse
    }
}

/// A run stored as consecutive holding segments, with the together-time
/// `U` accumulated at the start of each one.
#[derive(Clone, Debug)]
pub struct CtTrajectory<S> {
    pub segments: Vec<Segment<S>>,
    u_start: Vec<f64>,
}

impl<S: Copy + Eq> CtTrajectory<S> {
    pub fn simulate<K: RateKernel<State = S>>(chain: &K, start: (S, S), jumps: usize, rng: &mut SeededStream) -> Self {
        let mut segments = Vec::with_capacity(jumps);
        let mut u_start = Vec::with_capacity(jumps);
        let mut s = CatMouseState::new(start.0, start.1);
        let mut u = 0.0;
        for _ in 0..jumps {
            let (hold, next) = ct_step(s, chain, rng);
            segments.push(Segment {
                start: s.clock,
                hold,
                cat: s.cat,
                mouse: s.mouse,
            });
            u_start.push(u);
            if s.together() {
                u += hold;
            }
            s = next;
        }
        Self { segments, u_start }
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |g| g.start + g.hold)
    }

    /// Time spent together up to `t`.
    pub fn together_time(&self, t: f64) -> f64 {
        let i = self.segments.partition_point(|g| g.start <= t);
        if i == 0 {
            return 0.0;
        }
        let g = &self.segments[i - 1];
        let inside = if g.together() { (t - g.start).min(g.hold) } else { 0.0 };
        self.u_start[i - 1] + inside
    }

    /// Right-continuous inverse `S(u) = inf{t : U(t) > u}`, or `None` past
    /// the end of the run.
    pub fn inverse(&self, u: f64) -> Option<f64> {
        let i = self.u_start.partition_point(|&v| v <= u);
        // the crossing happens in the last together segment starting at or
        // below u
        self.segments[..i]
            .iter()
            .zip(&self.u_start[..i])
            .rev()
            .find(|(g, _)| g.together())
            .and_then(|(g, &v)| (u < v + g.hold).then(|| g.start + (u - v)))
    }

    /// `M(S(.))` as (state, holding time) pieces. Every together segment
    /// ends with a mouse move, so pieces only merge across loops.
    pub fn time_changed_mouse(&self) -> Vec<(S, f64)> {
        let mut out: Vec<(S, f64)> = Vec::new();
        let mut prev_end: Option<S> = None;
        for (i, g) in self.segments.iter().enumerate().filter(|(_, g)| g.together()) {
            let next_mouse = self.segments.get(i + 1).map(|n| n.mouse);
            match out.last_mut() {
                Some(last) if prev_end == Some(g.mouse) && last.0 == g.mouse => last.1 += g.hold,
                _ => out.push((g.mouse, g.hold)),
            }
            // a loop leaves the mouse in place and the piece continues
            prev_end = if next_mouse == Some(g.mouse) { Some(g.mouse) } else { None };
        }
        out
    }

    /// Destinations of the mouse after each together segment.
    pub fn mouse_moves(&self) -> Vec<(S, S)> {
        self.segments
            .windows(2)
            .filter(|w| w[0].together())
            .map(|w| (w[0].mouse, w[1].mouse))
            .collect()
    }

    /// `U` increases on exactly the together segments.
    pub fn u_is_consistent(&self) -> bool {
        self.segments.iter().enumerate().all(|(i, g)| {
            let du = self.together_time(g.start + g.hold) - self.together_time(g.start);
            if g.together() {
                (du - g.hold).abs() <= 1e-9 * (1.0 + self.u_start[i])
            } else {
                du == 0.0
            }
        })
    }
}

/// Holds and up-move counts of the time-changed mouse at states `0..=max`.
#[derive(Clone, Debug, Default)]
pub struct TimeChangeData {
    pub holds: Vec<Vec<f64>>,
    pub ups: Vec<u64>,
    pub moves: Vec<u64>,
    /// `(t, U(t)/t)` at the end of each replica.
    pub occupation: Vec<(f64, f64)>,
}

impl TimeChangeData {
    pub fn new(max_state: u64) -> Self {
        let k = max_state as usize + 1;
        Self {
            holds: vec![Vec::new(); k],
            ups: vec![0; k],
            moves: vec![0; k],
            occupation: Vec::new(),
        }
    }

    pub fn absorb(&mut self, tr: &CtTrajectory<u64>) {
        for (x, h) in tr.time_changed_mouse() {
            if let Some(v) = self.holds.get_mut(x as usize) {
                v.push(h);
            }
        }
        for (from, to) in tr.mouse_moves() {
            if (from as usize) < self.moves.len() {
                self.moves[from as usize] += 1;
                if to > from {
                    self.ups[from as usize] += 1;
                }
            }
        }
        let t = tr.end_time();
        if t > 0.0 {
            self.occupation.push((t, tr.together_time(t) / t));
        }
    }

    pub fn merge(&mut self, other: TimeChangeData) {
        for (a, b) in self.holds.iter_mut().zip(other.holds) {
            a.extend(b);
        }
        for (a, b) in self.ups.iter_mut().zip(other.ups) {
            *a += b;
        }
        for (a, b) in self.moves.iter_mut().zip(other.moves) {
            *a += b;
        }
        self.occupation.extend(other.occupation);
    }

    /// Smallest hold count over the tracked states.
    pub fn min_holds(&self) -> usize {
        self.holds.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// One replica of the time-change check: `jumps` jumps from `(0, 0)`.
pub fn time_change_replica(q: &MmInf, max_state: u64, jumps: usize, rng: &mut SeededStream) -> TimeChangeData {
    let tr = CtTrajectory::simulate(q, (0, 0), jumps, rng);
    let mut d = TimeChangeData::new(max_state);
    d.absorb(&tr);
    d
}

/// Holding times of the lone cat at `x` from a direct run.
pub fn cat_holds(q: &MmInf, x: u64, count: usize, rng: &mut SeededStream) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 0u64;
    while out.len() < count {
        let h = rng.exp(q.rate(c));
        if c == x {
            out.push(h);
        }
        c = crate::chain::Kernel::step(q, c, rng);
    }
    out
}

/// `F(k) / pi(k)` for the Poisson(rho) law, `k = 0..n`.
fn cdf_over_pmf(rho: f64, n: u64) -> Vec<f64> {
    let mut r = Vec::with_capacity(n as usize);
    let mut v = 1.0;
    for k in 0..n {
        if k > 0 {
            v = v * k as f64 / rho + 1.0;
        }
        r.push(v);
    }
    r
}

/// `P(X >= k) / pi(k)` for the Poisson(rho) law.
fn tail_over_pmf(rho: f64, k: u64) -> f64 {
    let (mut acc, mut term, mut j) = (1.0, 1.0, k);
    loop {
        j += 1;
        term *= rho / j as f64;
        acc += term;
        if term < 1e-17 * acc {
            return acc;
        }
    }
}

/// Exact `E_x T_n` for `x < n`: the flow through the edge `k -> k+1`
/// gives `E_k T_{k+1} = F(k) / (pi(k) rho)`.
pub fn expected_up_time(q: &MmInf, x: u64, n: u64) -> f64 {
    assert!(x < n);
    cdf_over_pmf(q.rho(), n)[x as usize..].iter().sum::<f64>() / q.rho()
}

/// `E_0(T_n) rho^n / (n-1)!`, summed in logs so large `n` is fine.
pub fn hitting_constant(q: &MmInf, n: u64) -> f64 {
    // term k is F(k) e^rho rho^(n-1-k) k! / (n-1)!
    let rho = q.rho();
    let (mut cdf, mut pmf) = (0.0, (-rho).exp());
    let mut total = 0.0;
    for k in 0..n {
        cdf += pmf;
        pmf *= rho / (k + 1) as f64;
        let log_ratio = (n - 1 - k) as f64 * rho.ln() + ln_factorial(k) - ln_factorial(n - 1);
        total += cdf.min(1.0) * rho.exp() * log_ratio.exp();
    }
    total
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// Exact `E_n T_0`, from `E_k T_{k-1} = P(X >= k) / (k pi(k))`.
pub fn expected_down_time(q: &MmInf, n: u64) -> f64 {
    (1..=n).map(|k| tail_over_pmf(q.rho(), k) / k as f64).sum()
}

/// `T_n` from `x < n`, drawn level by level.
pub fn hitting_time_up(q: &MmInf, x: u64, n: u64, rng: &mut SeededStream) -> f64 {
    up_time(x, n, |l| q.up_probability(l), |l| q.rate(l), rng)
}

/// `T_0` from `n`, by direct event simulation.
pub fn hitting_time_down(q: &MmInf, n: u64, rng: &mut SeededStream) -> f64 {
    let (mut c, mut t) = (n, 0.0);
    while c > 0 {
        t += rng.exp(q.rate(c));
        c = crate::chain::Kernel::step(q, c, rng);
    }
    t
}

/// Declared cost of upward hitting runs in jumps of a plain simulation.
pub fn expected_up_jumps(q: &MmInf, n: u64, replicas: u64) -> f64 {
    expected_up_time(q, 0, n) * (q.rho() + n as f64) * replicas as f64
}

/// Mouse level when the cat first hits 0, starting together at `n`.
/// Time plays no part, so the embedded chain is stepped.
pub fn mouse_at_cat_zero(q: &MmInf, n: u64, rng: &mut SeededStream) -> u64 {
    let mut s = CatMouseState::new(n, n);
    while s.cat != 0 {
        s = cm_step(s, q, rng);
    }
    s.mouse
}

/// `M(T_0) / n` with the pair started together at `n`.
pub fn f_sample(q: &MmInf, n: u64, rng: &mut SeededStream) -> Result<f64> {
    if n < 200 {
        return Err(Error::Parameter(format!("F sampling needs n >= 200, got {n}")));
    }
    Ok(mouse_at_cat_zero(q, n, rng) as f64 / n as f64)
}

/// Mouse levels after successive rounds. A round starts with the pair
/// together at the mouse's level (the cat's climb there does not move the
/// mouse) and ends when the cat hits 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeRecord {
    pub levels: Vec<u64>,
    /// The mouse fell below the floor before all rounds were played.
    pub truncated: bool,
}

impl CascadeRecord {
    /// `log(M_k / M_{k+1})` for each completed round.
    pub fn log_decrements(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .filter(|w| w[1] > 0)
            .map(|w| (w[0] as f64 / w[1] as f64).ln())
            .collect()
    }
}

pub fn cascade_replica(q: &MmInf, n: u64, rounds: usize, floor: u64, rng: &mut SeededStream) -> CascadeRecord {
    let mut levels = vec![n];
    let mut m = n;
    for _ in 0..rounds {
        if m < floor.max(1) {
            return CascadeRecord { levels, truncated: true };
        }
        m = mouse_at_cat_zero(q, m, rng);
        levels.push(m);
    }
    CascadeRecord { levels, truncated: false }
}

/// Cat levels read off a long run every `spacing` time units.
pub fn occupation_samples(q: &MmInf, spacing: f64, samples: usize, rng: &mut SeededStream) -> Vec<u64> {
    let mut out = Vec::with_capacity(samples);
    let (mut c, mut t) = (0u64, 0.0);
    let mut next_jump = rng.exp(q.rate(c));
    while out.len() < samples {
        t += spacing;
        while next_jump <= t {
            c = crate::chain::Kernel::step(q, c, rng);
            next_jump += rng.exp(q.rate(c));
        }
        out.push(c);
    }
    out
}

/// Poisson(rho) cell probabilities for `0..cells-1`, the last cell taking
/// the tail.
pub fn poisson_cells(rho: f64, cells: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(cells);
    let mut term = (-rho).exp();
    for k in 0..cells - 1 {
        p.push(term);
        term *= rho / (k + 1) as f64;
    }
    p.push(1.0 - p.iter().sum::<f64>());
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Kernel, FiniteChain};
    use crate::kernel::pair_index;
    use crate::stationary::nu_exact;
    use crate::stats::{chi_square_gof, ks_distance, ks_two_sample, oracle::exponential_cdf};

    #[test]
    fn holds_apart_use_the_cat_rate() {
        let q = MmInf::new(1.5).unwrap();
        let mut rng = SeededStream::new(1, 0);
        let holds: Vec<f64> = (0..20_000)
            .map(|_| ct_step(CatMouseState::new(3u64, 7u64), &q, &mut rng).0)
            .collect();
        let v = ks_distance("hold at (3,7)", &holds, |x| exponential_cdf(1.0 / 4.5, x), 0.02).unwrap();
        assert!(v.pass, "{v}");
    }

    #[test]
    fn jump_chain_is_the_discrete_pair() {
        // same stream layout: the hold draw comes first, so skip it in the
        // discrete replay
        let q = MmInf::new(1.0).unwrap();
        let mut a = SeededStream::new(2, 0);
        let mut b = SeededStream::new(2, 0);
        let mut s = CatMouseState::new(2u64, 2u64);
        let mut d = s;
        for _ in 0..1000 {
            s = ct_step(s, &q, &mut a).1;
            let _ = b.exp(q.rate(d.cat));
            d = cm_step(d, &q, &mut b);
            assert_eq!((s.cat, s.mouse), (d.cat, d.mouse));
        }
    }

    #[test]
    fn u_and_its_inverse() {
        let q = MmInf::new(1.0).unwrap();
        let mut rng = SeededStream::new(3, 0);
        let tr = CtTrajectory::simulate(&q, (0, 0), 5000, &mut rng);
        assert!(tr.u_is_consistent());
        let total = tr.together_time(tr.end_time());
        for k in 1..50 {
            let u = total * k as f64 / 50.0;
            let s = tr.inverse(u).unwrap();
            assert!((tr.together_time(s) - u).abs() < 1e-9);
        }
        assert!(tr.inverse(total + 1.0).is_none());
        let pieces: f64 = tr.time_changed_mouse().iter().map(|p| p.1).sum();
        assert!((pieces - total).abs() < 1e-9);
    }

    #[test]
    fn time_changed_mouse_moves_like_the_cat() {
        let q = MmInf::new(1.0).unwrap();
        let mut data = TimeChangeData::new(2);
        for r in 0..200 {
            data.merge(time_change_replica(&q, 2, 5000, &mut SeededStream::new(4, r)));
        }
        for x in 0..=2u64 {
            let h = &data.holds[x as usize];
            let v = ks_distance("hold", h, |t| exponential_cdf(1.0 / (1.0 + x as f64), t), 0.03).unwrap();
            assert!(v.pass, "x={x}: {v}");
            let direct = cat_holds(&q, x, 20_000, &mut SeededStream::new(5, x));
            assert!(ks_two_sample("vs cat", h, &direct, 0.03).unwrap().pass);
            let (up, n) = (data.ups[x as usize] as f64, data.moves[x as usize] as f64);
            let target = q.up_probability(x);
            assert!((up / n - target).abs() <= 4.0 * (target * (1.0 - target) / n).sqrt());
        }
    }

    #[test]
    fn exact_hitting_means() {
        let q = MmInf::new(1.3).unwrap();
        let chain = q.truncated_embedded(8).unwrap();
        // embedded steps to hit 5 times mean holding time, by first-step
        // analysis on {0..5}
        let mut m = vec![0.0; 6];
        for _ in 0..20_000 {
            let mut next = m.clone();
            for x in 0..5 {
                next[x] = 1.0 / q.rate(x as u64)
                    + chain.row(x).iter().enumerate().map(|(y, p)| p * m[y.min(5)]).sum::<f64>();
            }
            m = next;
        }
        assert!((m[0] - expected_up_time(&q, 0, 5)).abs() < 1e-8 * m[0]);
        assert!((m[2] - expected_up_time(&q, 2, 5)).abs() < 1e-8 * m[2]);
        // downward: from 1, E T_0 = (e^rho - 1) / rho
        let d1 = expected_down_time(&q, 1);
        assert!((d1 - (q.rho().exp() - 1.0) / q.rho()).abs() < 1e-12);
        let direct = expected_up_time(&q, 0, 12) * q.rho().powi(12) / 39_916_800.0;
        assert!((hitting_constant(&q, 12) - direct).abs() < 1e-10 * direct);
        // the constant tends to e^rho, with a 1/n correction
        let c = hitting_constant(&q, 2000) / q.rho().exp();
        assert!(c > 1.0 && c - 1.0 < 2.0 / 2000.0, "{c}");
    }

    #[test]
    fn sampled_hitting_times_match_exact_means() {
        let q = MmInf::new(1.0).unwrap();
        let mut rng = SeededStream::new(6, 0);
        let up: Vec<f64> = (0..20_000).map(|_| hitting_time_up(&q, 0, 6, &mut rng)).collect();
        assert!(crate::stats::mean_within_sigma("E T_6", &up, expected_up_time(&q, 0, 6), 4.0).pass);
        let down: Vec<f64> = (0..2000).map(|_| hitting_time_down(&q, 200, &mut rng)).collect();
        assert!(crate::stats::mean_within_sigma("E T_0", &down, expected_down_time(&q, 200), 4.0).pass);
    }

    #[test]
    fn f_law_at_moderate_n() {
        let q = MmInf::new(1.0).unwrap();
        let mut rng = SeededStream::new(7, 0);
        let f: Vec<f64> = (0..3000).map(|_| f_sample(&q, 300, &mut rng).unwrap()).collect();
        let v = ks_distance("F uniform", &f, |x| x.clamp(0.0, 1.0), 0.04).unwrap();
        assert!(v.pass, "{v}");
        assert!(f_sample(&q, 100, &mut rng).is_err());
    }

    #[test]
    fn cascade_bookkeeping() {
        let q = MmInf::new(2.0).unwrap();
        let mut rng = SeededStream::new(8, 0);
        let r = cascade_replica(&q, 500, 0, 10, &mut rng);
        assert_eq!(r.levels, vec![500]);
        let r = cascade_replica(&q, 2000, 3, 10, &mut rng);
        assert!(r.truncated || r.levels.len() == 4);
        assert!(r.log_decrements().iter().all(|d| d.is_finite()));
    }

    #[test]
    fn occupation_is_poisson() {
        let q = MmInf::new(2.0).unwrap();
        let xs = occupation_samples(&q, 5.0, 50_000, &mut SeededStream::new(9, 0));
        let cells = 10;
        let mut counts = vec![0u64; cells];
        for x in xs {
            counts[(x as usize).min(cells - 1)] += 1;
        }
        let v = chi_square_gof("Poisson(2)", &counts, &poisson_cells(2.0, cells), 0.001).unwrap();
        assert!(v.pass, "{v}");
    }

    /// M/M/inf on `{0..k}` with the up-move from `k` sent to 0, which keeps
    /// the rates and makes the chain aperiodic for even `k`.
    struct Capped(MmInf, u64);

    impl Kernel for Capped {
        type State = u64;
        fn transitions(&self, x: u64) -> Vec<(u64, f64)> {
            self.0
                .transitions(x)
                .into_iter()
                .map(|(y, p)| (if y > self.1 { 0 } else { y }, p))
                .collect()
        }
        fn step(&self, x: u64, rng: &mut SeededStream) -> u64 {
            let y = self.0.step(x, rng);
            if y > self.1 {
                0
            } else {
                y
            }
        }
    }

    impl RateKernel for Capped {
        fn rate(&self, x: u64) -> f64 {
            self.0.rate(x)
        }
    }

    #[test]
    fn ct_occupation_is_nu_over_rate() {
        let q = MmInf::new(1.0).unwrap();
        let k = 4u64;
        let n = k as usize + 1;
        let capped = Capped(q, k);
        let rows = (0..n as u64)
            .map(|x| {
                let mut row = vec![0.0; n];
                for (y, p) in capped.transitions(x) {
                    row[y as usize] += p;
                }
                row
            })
            .collect();
        let embedded = FiniteChain::new(rows).unwrap();
        let nu = nu_exact(&embedded).unwrap();
        let mut weight = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                weight[pair_index(n, x, y)] = nu.nu(x, y) / q.rate(x as u64);
            }
        }
        let total: f64 = weight.iter().sum();
        let tr = CtTrajectory::simulate(&capped, (0, 0), 400_000, &mut SeededStream::new(10, 0));
        let mut occ = vec![0.0; n * n];
        for g in &tr.segments {
            occ[pair_index(n, g.cat as usize, g.mouse as usize)] += g.hold;
        }
        let t = tr.end_time();
        for i in 0..n * n {
            assert!((occ[i] / t - weight[i] / total).abs() < 0.01, "state {i}");
        }
    }
}
