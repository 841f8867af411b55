use super::{Kernel, Measure};
use crate::error::{Error, Result};
use crate::stats::SeededStream;
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;
/// Construction switches. The strict defaults require no loops and an
/// aperiodic kernel.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Checks {
    pub allow_loops: bool,
    pub reject_periodic: bool,
}

impl Checks {
    pub const STRICT: Checks = Checks {
        allow_loops: false,
        reject_periodic: true,
    };
}

/// Dense row-stochastic kernel on `{0, .., n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteChain {
    n: usize,
    p: Vec<f64>,
    cum: Vec<f64>,
    labels: Option<Vec<String>>,
    irreducible: bool,
    period: Option<usize>,
}

impl FiniteChain {
    /// Kernel without loops, irreducible or not, but never periodic when
    /// irreducible.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows, Checks::STRICT)
    }

    /// Same as [`FiniteChain::new`] but tolerates `p(x, x) > 0`.
    pub fn with_loops(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(
            rows,
            Checks {
                allow_loops: true,
                ..Checks::STRICT
            },
        )
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let rows = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        Self::new(rows)
    }

    pub(crate) fn from_rows(rows: Vec<Vec<f64>>, checks: Checks) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidKernel("empty state space".into()));
        }
        let mut p = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidKernel(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            p.extend(row);
        }
        Self::from_flat(n, p, checks)
    }

    pub(crate) fn from_flat(n: usize, p: Vec<f64>, checks: Checks) -> Result<Self> {
        debug_assert_eq!(p.len(), n * n);
        for x in 0..n {
            let row = &p[x * n..(x + 1) * n];
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidKernel(format!("row {x} has invalid entry {v}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::RowNotStochastic { row: x, sum, tol: ROW_TOL });
            }
            if !checks.allow_loops && row[x] != 0.0 {
                return Err(Error::Loop(x, row[x]));
            }
        }
        let mut cum = vec![0.0; n * n];
        for x in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                acc += p[x * n + y];
                cum[x * n + y] = acc;
            }
        }
        let mut chain = FiniteChain {
            n,
            p,
            cum,
            labels: None,
            irreducible: false,
            period: None,
        };
        chain.irreducible = chain.strong_component(0).len() == n;
        if chain.irreducible {
            let d = chain.compute_period();
            chain.period = Some(d);
            if checks.reject_periodic && d > 1 {
                return Err(Error::Periodic(d));
            }
        }
        Ok(chain)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidKernel(format!(
                "{} labels for {} states",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.n + y]
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.p[x * self.n..(x + 1) * self.n]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, x: usize) -> String {
        match &self.labels {
            Some(l) => l[x].clone(),
            None => x.to_string(),
        }
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Period of the chain, known only when it is irreducible.
    pub fn period(&self) -> Option<usize> {
        self.period
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period == Some(1)
    }

    pub fn has_loops(&self) -> bool {
        (0..self.n).any(|x| self.p(x, x) != 0.0)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.p)
    }

    /// Largest deviation of a row sum from 1 and largest diagonal entry.
    pub fn kernel_defects(&self) -> (f64, f64) {
        let mut row_err = 0.0f64;
        let mut diag = 0.0f64;
        for x in 0..self.n {
            row_err = row_err.max((self.row(x).iter().sum::<f64>() - 1.0).abs());
            diag = diag.max(self.p(x, x));
        }
        (row_err, diag)
    }

    fn reach(&self, from: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..self.n {
                let w = if forward { self.p(u, v) } else { self.p(v, u) };
                if w > 0.0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// States reachable from `x` in zero or more steps.
    pub fn reachable_from(&self, x: usize) -> Vec<usize> {
        self.reach(x, true)
            .into_iter()
            .enumerate()
            .filter_map(|(i, s)| s.then_some(i))
            .collect()
    }

    /// The communicating class of `x`.
    pub fn strong_component(&self, x: usize) -> Vec<usize> {
        let f = self.reach(x, true);
        let b = self.reach(x, false);
        (0..self.n).filter(|&i| f[i] && b[i]).collect()
    }

    /// gcd of `level(u) + 1 - level(v)` over edges, with BFS levels from 0.
    fn compute_period(&self) -> usize {
        let mut level = vec![usize::MAX; self.n];
        level[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        let mut order = Vec::with_capacity(self.n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for v in 0..self.n {
                if self.p(u, v) > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for &u in &order {
            for v in 0..self.n {
                if self.p(u, v) > 0.0 && level[v] != usize::MAX {
                    let diff = (level[u] + 1).abs_diff(level[v]);
                    g = gcd(g, diff);
                }
            }
        }
        g.max(1)
    }

    /// Unique invariant probability, from the balance equations with one of
    /// them replaced by the normalization.
    pub fn stationary(&self) -> Result<Measure> {
        if !self.irreducible {
            let class = self.strong_component(0);
            let outside = (0..self.n).filter(|i| !class.contains(i)).collect();
            return Err(Error::Reducible(outside));
        }
        let pi = self.stationary_on(&(0..self.n).collect::<Vec<_>>())?;
        Measure::probability(pi)
    }

    /// Invariant probability of the sub-kernel on `states`, which must form a
    /// closed communicating class. Returned as a vector over `states`.
    pub fn stationary_on(&self, states: &[usize]) -> Result<Vec<f64>> {
        let k = states.len();
        let sub = |i: usize, j: usize| self.p(states[i], states[j]);
        for (i, &s) in states.iter().enumerate() {
            let inside: f64 = (0..k).map(|j| sub(i, j)).sum();
            if (inside - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidKernel(format!(
                    "state {s} leaks mass {:.3e} out of the class",
                    1.0 - inside
                )));
            }
        }
        // (P^T - I) pi = 0 with the last equation swapped for sum(pi) = 1
        let mut a = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(j, i)] = sub(i, j);
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..k {
            a[(k - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(k);
        b[k - 1] = 1.0;
        let lu = a.clone().lu();
        let mut pi = lu.solve(&b).ok_or_else(|| Error::IllConditioned {
            context: "stationary solve".into(),
            condition: f64::INFINITY,
        })?;
        // one step of iterative refinement
        let r = &b - &a * &pi;
        if let Some(d) = lu.solve(&r) {
            pi += d;
        }
        let mut pi: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
        let s: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= s);
        let res = (0..k)
            .map(|j| ((0..k).map(|i| pi[i] * sub(i, j)).sum::<f64>() - pi[j]).abs())
            .fold(0.0, f64::max);
        if res > STATIONARY_TOL {
            return Err(Error::IllConditioned {
                context: format!("stationary residual {res:.3e}"),
                condition: condition_estimate(&a),
            });
        }
        Ok(pi)
    }

    /// Kernel of the time-reversed chain, `p*(x,y) = pi(y) p(y,x) / pi(x)`.
    /// Rows are renormalized to absorb rounding in `pi`.
    pub fn reversed(&self, pi: &Measure) -> Result<FiniteChain> {
        if pi.len() != self.n {
            return Err(Error::Parameter("measure and chain sizes differ".into()));
        }
        if let Some(x) = (0..self.n).find(|&x| !(pi[x] > 0.0)) {
            return Err(Error::ZeroMass(x));
        }
        let n = self.n;
        let mut q = vec![0.0; n * n];
        for x in 0..n {
            let row = &mut q[x * n..(x + 1) * n];
            for (y, v) in row.iter_mut().enumerate() {
                *v = pi[y] * self.p(y, x) / pi[x];
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-8 {
                return Err(Error::Parameter(format!(
                    "measure is not stationary: reversed row {x} sums to {s}"
                )));
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        let mut out = Self::from_flat(
            n,
            q,
            Checks {
                allow_loops: self.has_loops(),
                reject_periodic: false,
            },
        )?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Detailed balance `pi(x)p(x,y) = pi(y)p(y,x)` within `tol`.
    pub fn is_reversible(&self, pi: &Measure, tol: f64) -> bool {
        (0..self.n).all(|x| (0..self.n).all(|y| (pi[x] * self.p(x, y) - pi[y] * self.p(y, x)).abs() <= tol))
    }

    /// `E_x(H_target)` for every `x`, with `H_y = inf{n > 0 : C_n = y}`, so
    /// the entry at `target` is the mean return time.
    pub fn expected_hitting_times(&self, target: usize) -> Result<Vec<f64>> {
        if target >= self.n {
            return Err(Error::Parameter(format!("target {target} out of range")));
        }
        let n = self.n;
        let mut a = DMatrix::<f64>::identity(n, n);
        for x in 0..n {
            for z in 0..n {
                if z != target {
                    a[(x, z)] -= self.p(x, z);
                }
            }
        }
        let b = DVector::<f64>::from_element(n, 1.0);
        let singular = || Error::IllConditioned {
            context: format!("hitting times of state {target}"),
            condition: condition_estimate(&a),
        };
        let lu = a.clone().lu();
        let h = lu.solve(&b).ok_or_else(singular)?;
        if h.iter().any(|v| !v.is_finite() || *v < 1.0 - 1e-9) {
            return Err(singular());
        }
        Ok(h.iter().copied().collect())
    }

    /// Index of the next state given a uniform draw `u` in (0,1).
    #[inline]
    pub fn next_from_uniform(&self, x: usize, u: f64) -> usize {
        let cum = &self.cum[x * self.n..(x + 1) * self.n];
        let i = cum.partition_point(|&c| c <= u);
        // guard against rounding in the last cumulative entry
        let mut i = i.min(self.n - 1);
        while self.p(x, i) == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }
}

impl Kernel for FiniteChain {
    type State = usize;

    fn transitions(&self, x: usize) -> Vec<(usize, f64)> {
        self.row(x)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(y, &w)| (y, w))
            .collect()
    }

    #[inline]
    fn step(&self, x: usize, rng: &mut SeededStream) -> usize {
        self.next_from_uniform(x, rng.open01())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// 1-norm condition number through an explicit inverse; infinite when the
/// matrix is numerically singular.
pub(crate) fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match a.clone().try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}
