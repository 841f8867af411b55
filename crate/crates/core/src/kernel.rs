//! The cat-and-mouse pair built on top of a base kernel.
//!
//! While apart, only the cat moves. When the two share a site, both take an
//! independent step of the base kernel; the cat's draw is always taken from
//! the stream before the mouse's so trajectories replay bit for bit.

use crate::chain::{Checks, FiniteChain, Kernel};
use crate::error::{Error, Result};
use crate::stats::SeededStream;
use std::io::Write;

/// Default bound on the base size for an explicit product kernel.
pub const PRODUCT_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatMouseState<S> {
    pub cat: S,
    pub mouse: S,
    /// Elapsed time for continuous-time runs; stays 0 in discrete time.
    pub clock: f64,
}

impl<S: Copy + Eq> CatMouseState<S> {
    pub fn new(cat: S, mouse: S) -> Self {
        Self { cat, mouse, clock: 0.0 }
    }

    pub fn together(&self) -> bool {
        self.cat == self.mouse
    }
}

#[inline]
pub fn cm_step<K: Kernel>(s: CatMouseState<K::State>, base: &K, rng: &mut SeededStream) -> CatMouseState<K::State> {
    if s.cat != s.mouse {
        CatMouseState {
            cat: base.step(s.cat, rng),
            ..s
        }
    } else {
        let cat = base.step(s.cat, rng);
        let mouse = base.step(s.mouse, rng);
        CatMouseState { cat, mouse, clock: s.clock }
    }
}

/// Index of the product state `(x, y)` in [`cm_kernel`].
#[inline]
pub fn pair_index(n: usize, x: usize, y: usize) -> usize {
    x * n + y
}

pub fn cm_kernel(base: &FiniteChain) -> Result<FiniteChain> {
    cm_kernel_capped(base, PRODUCT_CAP)
}

/// Explicit kernel on `S x S`, row `(x, y)` at index `x * n + y`.
pub fn cm_kernel_capped(base: &FiniteChain, cap: usize) -> Result<FiniteChain> {
    let n = base.n_states();
    if n > cap {
        return Err(Error::ProductCap { states: n, cap });
    }
    let m = n * n;
    let mut q = vec![0.0; m * m];
    for x in 0..n {
        for y in 0..n {
            let row = &mut q[pair_index(n, x, y) * m..(pair_index(n, x, y) + 1) * m];
            if x != y {
                for z in 0..n {
                    row[pair_index(n, z, y)] = base.p(x, z);
                }
            } else {
                for z in 0..n {
                    for w in 0..n {
                        row[pair_index(n, z, w)] = base.p(y, z) * base.p(y, w);
                    }
                }
            }
        }
    }
    let chain = FiniteChain::from_flat(
        m,
        q,
        Checks {
            allow_loops: base.has_loops(),
            reject_periodic: false,
        },
    )?;
    let labels = (0..m).map(|i| format!("({},{})", base.label(i / n), base.label(i % n))).collect();
    chain.with_labels(labels)
}

/// One meeting-to-meeting cycle: `together_duration` steps with the pair on
/// a common site (the last of them separates it), then `apart_duration`
/// steps until the next meeting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRecord<S> {
    pub together_duration: u64,
    pub apart_duration: u64,
    pub mouse_start: S,
    pub mouse_end: S,
    /// False for a trailing cycle whose apart phase hit the step budget.
    pub complete: bool,
}

impl CycleRecord<i64> {
    pub fn displacement(&self) -> i64 {
        self.mouse_end - self.mouse_start
    }
}

impl CycleRecord<(i64, i64)> {
    pub fn displacement(&self) -> (i64, i64) {
        (self.mouse_end.0 - self.mouse_start.0, self.mouse_end.1 - self.mouse_start.1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleRun<S> {
    pub records: Vec<CycleRecord<S>>,
    pub steps: u64,
    /// Fewer than the requested cycles completed within the budget.
    pub partial: bool,
}

/// Runs the pair from `start` (which should be a meeting) and cuts the path
/// at meeting instants that follow a separation.
pub fn simulate_cycles<K: Kernel>(
    base: &K,
    start: CatMouseState<K::State>,
    n_cycles: usize,
    step_budget: u64,
    rng: &mut SeededStream,
) -> CycleRun<K::State> {
    let mut s = start;
    let mut steps = 0u64;
    let mut records = Vec::with_capacity(n_cycles);
    // reach a meeting first if started apart
    while !s.together() && steps < step_budget {
        s = cm_step(s, base, rng);
        steps += 1;
    }
    while records.len() < n_cycles && steps < step_budget {
        let mouse_start = s.mouse;
        let mut g = 0u64;
        while s.together() && steps < step_budget {
            s = cm_step(s, base, rng);
            steps += 1;
            g += 1;
        }
        if s.together() {
            break;
        }
        let mut apart = 0u64;
        while !s.together() && steps < step_budget {
            s = cm_step(s, base, rng);
            steps += 1;
            apart += 1;
        }
        records.push(CycleRecord {
            together_duration: g,
            apart_duration: apart,
            mouse_start,
            mouse_end: s.mouse,
            complete: s.together(),
        });
    }
    let complete = records.iter().filter(|r| r.complete).count();
    CycleRun {
        partial: complete < n_cycles,
        records,
        steps,
    }
}

/// Formatting of states in trajectory dumps.
pub trait CsvState: Copy {
    fn columns(prefix: &str) -> String;
    fn fields(&self) -> String;
}

macro_rules! scalar_csv {
    ($($t:ty),*) => {$(
        impl CsvState for $t {
            fn columns(prefix: &str) -> String {
                prefix.to_string()
            }
            fn fields(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
scalar_csv!(usize, u64, i64);

impl CsvState for (i64, i64) {
    fn columns(prefix: &str) -> String {
        format!("{prefix}_x,{prefix}_y")
    }
    fn fields(&self) -> String {
        format!("{},{}", self.0, self.1)
    }
}

/// Writes `step,cat,mouse` rows, plus `clock` when `with_clock` is set.
pub fn write_trajectory<S: CsvState, W: Write>(
    out: &mut W,
    path: &[CatMouseState<S>],
    with_clock: bool,
) -> std::io::Result<()> {
    write!(out, "step,{},{}", S::columns("cat"), S::columns("mouse"))?;
    writeln!(out, "{}", if with_clock { ",clock" } else { "" })?;
    for (i, s) in path.iter().enumerate() {
        write!(out, "{i},{},{}", s.cat.fields(), s.mouse.fields())?;
        if with_clock {
            write!(out, ",{}", s.clock)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{LineWalk, PlaneWalk};

    fn four_state() -> FiniteChain {
        FiniteChain::new(vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn apart_rows_leave_mouse_alone() {
        let base = four_state();
        let q = cm_kernel(&base).unwrap();
        for x in 0..4 {
            for y in (0..4).filter(|&y| y != x) {
                for z in 0..4 {
                    for w in 0..4 {
                        let expect = if w == y { base.p(x, z) } else { 0.0 };
                        assert_eq!(q.p(pair_index(4, x, y), pair_index(4, z, w)), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn together_rows_are_outer_products() {
        let base = four_state();
        let q = cm_kernel(&base).unwrap();
        for z in 0..4 {
            for w in 0..4 {
                assert_eq!(q.p(pair_index(4, 1, 1), pair_index(4, z, w)), base.p(1, z) * base.p(1, w));
            }
        }
    }

    #[test]
    fn unreachable_pair_in_four_state_example() {
        let q = cm_kernel(&four_state()).unwrap();
        let reach = q.reachable_from(pair_index(4, 1, 1));
        assert!(!reach.contains(&pair_index(4, 0, 3)));
        assert!(reach.contains(&pair_index(4, 1, 1)));
    }

    #[test]
    fn product_cap() {
        let n = 65;
        let rows = (0..n)
            .map(|x| (0..n).map(|y| if y == (x + 1) % n || y == (x + 2) % n { 0.5 } else { 0.0 }).collect())
            .collect();
        let base = FiniteChain::new(rows).unwrap();
        assert_eq!(cm_kernel(&base).unwrap_err(), Error::ProductCap { states: 65, cap: 64 });
    }

    #[test]
    fn mouse_moves_only_from_meetings() {
        let mut rng = SeededStream::new(5, 0);
        let mut s = CatMouseState::new((0i64, 0i64), (0, 0));
        for _ in 0..100_000 {
            let t = cm_step(s, &PlaneWalk, &mut rng);
            if t.mouse != s.mouse {
                assert!(s.together());
            }
            s = t;
        }
    }

    #[test]
    fn cycles_on_a_finite_chain_close() {
        let base = four_state();
        let mut rng = SeededStream::new(6, 0);
        let run = simulate_cycles(&base, CatMouseState::new(1, 1), 1000, u64::MAX, &mut rng);
        assert!(!run.partial);
        assert!(run
            .records
            .iter()
            .all(|r| r.together_duration >= 1 && r.apart_duration >= 1 && r.complete));
        let total: u64 = run.records.iter().map(|r| r.together_duration + r.apart_duration).sum();
        assert_eq!(total, run.steps);
    }

    #[test]
    fn budget_flags_partial() {
        let mut rng = SeededStream::new(7, 0);
        let run = simulate_cycles(&LineWalk, CatMouseState::new(0, 0), 1_000_000, 10_000, &mut rng);
        assert!(run.partial);
        assert_eq!(run.steps, 10_000);
    }

    #[test]
    fn trajectory_csv() {
        let path = [CatMouseState::new((0i64, 0i64), (0, 0)), CatMouseState::new((1, 0), (0, -1))];
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &path, false).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,cat_x,cat_y,mouse_x,mouse_y\n0,0,0,0,0\n1,1,0,0,-1\n"
        );
    }
}
