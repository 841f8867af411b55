//! The invariant measure of the cat-and-mouse chain on a finite base.
//!
//! For each target `y`, `g_y(x) = E_x(sum_{n=1}^{H*_y} p(C*_n, y))` on the
//! reversed chain solves `g_y = P*(p(., y) + 1{. != y} g_y)`, and
//! `nu(x, y) = pi(x) g_y(x)`.

use crate::chain::{condition_estimate, FiniteChain, Measure};
use crate::error::{Error, Result};
use crate::kernel::{cm_kernel, pair_index};
use crate::stats::SeededStream;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Detailed-balance tolerance used to classify a chain as reversible.
pub const REVERSIBLE_TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct NuTable {
    n: usize,
    nu: Vec<f64>,
    pub nu2: Vec<f64>,
    pub alpha: f64,
    pub pi: Vec<f64>,
    /// `h(x) = sum_y g_y(x)`; constant in `x`, equal to `alpha`.
    pub h: Vec<f64>,
}

impl NuTable {
    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn nu(&self, x: usize, y: usize) -> f64 {
        self.nu[x * self.n + y]
    }

    /// Largest violations of `nu(x,x) = pi(x)` and of
    /// `sum_y nu(x,y) = alpha pi(x)`.
    pub fn invariant_defects(&self) -> (f64, f64) {
        let n = self.n;
        let diag = (0..n).map(|x| (self.nu(x, x) - self.pi[x]).abs()).fold(0.0, f64::max);
        let rows = (0..n)
            .map(|x| ((0..n).map(|y| self.nu(x, y)).sum::<f64>() - self.alpha * self.pi[x]).abs())
            .fold(0.0, f64::max);
        (diag, rows)
    }

    /// Spread `max h - min h`.
    pub fn h_spread(&self) -> f64 {
        let hi = self.h.iter().copied().fold(f64::MIN, f64::max);
        let lo = self.h.iter().copied().fold(f64::MAX, f64::min);
        hi - lo
    }

    /// Copy with one entry shifted, for detector checks.
    pub fn perturbed(&self, x: usize, y: usize, delta: f64) -> NuTable {
        let mut t = self.clone();
        t.nu[x * self.n + y] += delta;
        t
    }
}

fn require_base(base: &FiniteChain) -> Result<()> {
    if let Some(x) = (0..base.n_states()).find(|&x| base.p(x, x) != 0.0) {
        return Err(Error::Loop(x, base.p(x, x)));
    }
    if !base.is_irreducible() {
        return base.stationary().map(|_| ());
    }
    Ok(())
}

pub fn nu_exact(base: &FiniteChain) -> Result<NuTable> {
    require_base(base)?;
    let n = base.n_states();
    let pi_m = base.stationary()?;
    let pstar = base.reversed(&pi_m)?;
    let pi = pi_m.into_vec();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let mut a = DMatrix::<f64>::identity(n, n);
            let mut b = DVector::<f64>::zeros(n);
            for x in 0..n {
                for z in 0..n {
                    let ps = pstar.p(x, z);
                    b[x] += ps * base.p(z, y);
                    if z != y {
                        a[(x, z)] -= ps;
                    }
                }
            }
            let g = a.clone().lu().solve(&b).ok_or_else(|| Error::IllConditioned {
                context: format!("nu column {y}"),
                condition: condition_estimate(&a),
            })?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::IllConditioned {
                    context: format!("nu column {y}"),
                    condition: condition_estimate(&a),
                });
            }
            Ok(g.iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    let mut nu = vec![0.0; n * n];
    let mut h = vec![0.0; n];
    for (y, g) in columns.iter().enumerate() {
        for x in 0..n {
            nu[x * n + y] = pi[x] * g[x];
            h[x] += g[x];
        }
    }
    let nu2: Vec<f64> = (0..n).map(|y| (0..n).map(|x| nu[x * n + y]).sum()).collect();
    let alpha = nu2.iter().sum();
    Ok(NuTable {
        n,
        nu,
        nu2,
        alpha,
        pi,
        h,
    })
}

/// `nu2(y) = sum_x pi(x) p(x,y) E_x(H_y)`, through hitting times of the
/// forward chain only.
pub fn nu2_direct(base: &FiniteChain) -> Result<Measure> {
    require_base(base)?;
    let n = base.n_states();
    let pi = base.stationary()?;
    let nu2 = (0..n)
        .into_par_iter()
        .map(|y| {
            let h = base.expected_hitting_times(y)?;
            Ok((0..n).map(|x| pi[x] * base.p(x, y) * h[x]).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Measure::new(nu2)
}

/// Largest residual of the balance equations
/// `nu(x,y) = sum_{z != y} nu(z,y) p(z,x) + sum_z nu(z,z) p(z,x) p(z,y)`
/// over `points`. `preds(x)` lists every `z` with `p(z,x) > 0`.
pub fn balance_residual<N, P, Z, I>(points: I, nu: N, p: P, preds: Z) -> f64
where
    N: Fn(usize, usize) -> f64,
    P: Fn(usize, usize) -> f64,
    Z: Fn(usize) -> Vec<usize>,
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut worst = 0.0f64;
    for (x, y) in points {
        let mut rhs = 0.0;
        for z in preds(x) {
            let pzx = p(z, x);
            if z != y {
                rhs += nu(z, y) * pzx;
            }
            rhs += nu(z, z) * pzx * p(z, y);
        }
        worst = worst.max((nu(x, y) - rhs).abs());
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    pub max_residual: f64,
    pub pass: bool,
}

pub fn verify_invariance(table: &NuTable, base: &FiniteChain) -> InvarianceReport {
    let n = base.n_states();
    let points = (0..n).flat_map(|x| (0..n).map(move |y| (x, y)));
    let preds = |x: usize| (0..n).filter(|&z| base.p(z, x) > 0.0).collect();
    let r = balance_residual(points, |x, y| table.nu(x, y), |x, y| base.p(x, y), preds);
    InvarianceReport {
        max_residual: r,
        pass: r < 1e-9,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TetaliCheck {
    pub alpha: f64,
    pub bound: f64,
    pub pass: bool,
    pub reversible: bool,
    /// Only meaningful for reversible chains: `alpha = N - 1` within 1e-9.
    pub equality: bool,
}

pub fn tetali_bound_check(base: &FiniteChain) -> Result<TetaliCheck> {
    let t = nu_exact(base)?;
    let pi = Measure::probability(t.pi.clone())?;
    let bound = (base.n_states() - 1) as f64;
    let reversible = base.is_reversible(&pi, REVERSIBLE_TOL);
    Ok(TetaliCheck {
        alpha: t.alpha,
        bound,
        pass: t.alpha <= bound + 1e-9,
        reversible,
        equality: reversible && (t.alpha - bound).abs() <= 1e-9,
    })
}

/// Limit law of the pair, `nu / alpha`, indexed like [`cm_kernel`].
pub fn limit_law_finite(base: &FiniteChain) -> Result<Measure> {
    let n = base.n_states();
    if n > crate::kernel::PRODUCT_CAP {
        return Err(Error::ProductCap {
            states: n,
            cap: crate::kernel::PRODUCT_CAP,
        });
    }
    let t = nu_exact(base)?;
    let mut w = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            w[pair_index(n, x, y)] = t.nu(x, y) / t.alpha;
        }
    }
    Measure::new(w)?.normalize()
}

/// Stationary law of the explicit product kernel on the class reached from
/// the diagonal, zero elsewhere. Independent of the `nu` solves.
pub fn limit_law_by_product(base: &FiniteChain) -> Result<Measure> {
    let n = base.n_states();
    let q = cm_kernel(base)?;
    let class = q.reachable_from(pair_index(n, 0, 0));
    let local = q.stationary_on(&class)?;
    let mut w = vec![0.0; n * n];
    for (i, &s) in class.iter().enumerate() {
        w[s] = local[i];
    }
    Measure::probability(w)
}

/// Rows uniform on the simplex over the off-diagonal entries, each kept
/// with probability `density` (at least one per row), redrawn until the
/// chain is irreducible and aperiodic.
pub fn random_chain(n: usize, density: f64, rng: &mut SeededStream) -> FiniteChain {
    assert!(n >= 3, "random chains need at least 3 states");
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|x| {
                let mut row: Vec<f64> = (0..n)
                    .map(|y| if y != x && rng.open01() < density { rng.exp(1.0) } else { 0.0 })
                    .collect();
                if row.iter().all(|&v| v == 0.0) {
                    let y = (x + 1 + (rng.open01() * (n - 1) as f64) as usize) % n;
                    row[y] = 1.0;
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                fix_row_sum(&mut row);
                row
            })
            .collect();
        if let Ok(c) = FiniteChain::new(rows) {
            if c.is_irreducible() {
                return c;
            }
        }
    }
}

/// Random walk on a random weighted graph: symmetric positive weights on
/// the off-diagonal, rows normalized. Reversible with `pi` proportional to
/// the weighted degree.
pub fn random_reversible_chain(n: usize, rng: &mut SeededStream) -> FiniteChain {
    assert!(n >= 3);
    let mut w = vec![0.0; n * n];
    for x in 0..n {
        for y in x + 1..n {
            let v = rng.exp(1.0);
            w[x * n + y] = v;
            w[y * n + x] = v;
        }
    }
    let rows = (0..n)
        .map(|x| {
            let s: f64 = w[x * n..(x + 1) * n].iter().sum();
            let mut row: Vec<f64> = w[x * n..(x + 1) * n].iter().map(|v| v / s).collect();
            fix_row_sum(&mut row);
            row
        })
        .collect();
    FiniteChain::new(rows).expect("complete graph walk is irreducible and aperiodic")
}

/// Push the rounding residue of a normalized row onto its largest entry.
fn fix_row_sum(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    let (i, _) = row
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    row[i] += 1.0 - s;
}

/// `r` cycles of lengths `sizes` glued at state 0. State `(k, i)` sits at
/// index `1 + sizes[..k].sum() + (i - 1)`, `i = 1..=sizes[k]`; the walk
/// enters cycle `k` at `(k, m_k)`, walks down to `(k, 1)`, then returns to 0.
pub fn r_cycles_chain(sizes: &[usize]) -> Result<FiniteChain> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Parameter("cycle sizes must be positive".into()));
    }
    let m: usize = sizes.iter().sum();
    let n = m + 1;
    let r = sizes.len() as f64;
    let mut rows = vec![vec![0.0; n]; n];
    let mut labels = vec!["0".to_string()];
    let mut offset = 1;
    for (k, &mk) in sizes.iter().enumerate() {
        for i in 1..=mk {
            let idx = offset + i - 1;
            labels.push(format!("{}.{}", k + 1, i));
            if i == 1 {
                rows[idx][0] = 1.0;
            } else {
                rows[idx][idx - 1] = 1.0;
            }
        }
        rows[0][offset + mk - 1] += 1.0 / r;
        offset += mk;
    }
    FiniteChain::new(rows)?.with_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_cycles_small_case() {
        let c = r_cycles_chain(&[1, 2]).unwrap();
        let t = nu_exact(&c).unwrap();
        let pi = [0.4, 0.2, 0.2, 0.2];
        for (x, &v) in pi.iter().enumerate() {
            assert!((t.pi[x] - v).abs() < 1e-12);
        }
        // entry states: pi(y)(m - m_k + r); from 0 each failed excursion into
        // cycle j costs m_j + 1 steps, so E_0(H) = 1 + sum_{j != k}(m_j + 1)
        let expect = [0.4, 0.8, 0.2, 0.6];
        for (y, &v) in expect.iter().enumerate() {
            assert!((t.nu2[y] - v).abs() < 1e-12, "{y}: {}", t.nu2[y]);
        }
        assert!((t.alpha - 2.0).abs() < 1e-12);
    }

    #[test]
    fn loops_are_refused() {
        let c = FiniteChain::with_loops(vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(nu_exact(&c), Err(Error::Loop(0, _))));
    }

    #[test]
    fn perturbation_is_detected() {
        let mut rng = SeededStream::new(1, 0);
        let c = random_chain(5, 1.0, &mut rng);
        let t = nu_exact(&c).unwrap();
        assert!(verify_invariance(&t, &c).pass);
        let bad = t.perturbed(1, 3, 1e-3);
        assert!(verify_invariance(&bad, &c).max_residual >= 1e-4);
    }

    #[test]
    fn reversible_generator_is_reversible() {
        let mut rng = SeededStream::new(2, 0);
        let c = random_reversible_chain(6, &mut rng);
        let chk = tetali_bound_check(&c).unwrap();
        assert!(chk.reversible && chk.equality, "{chk:?}");
    }

    #[test]
    fn symmetric_ring_nu2() {
        let n = 6;
        let rows = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| if y == (x + 1) % n || y == (x + n - 1) % n { 0.5 } else { 0.0 })
                    .collect()
            })
            .collect();
        // even ring is periodic
        assert_eq!(FiniteChain::new(rows).unwrap_err(), Error::Periodic(2));
        let n = 5;
        let rows = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| if y == (x + 1) % n || y == (x + n - 1) % n { 0.5 } else { 0.0 })
                    .collect()
            })
            .collect();
        let c = FiniteChain::new(rows).unwrap();
        let d = nu2_direct(&c).unwrap();
        for y in 0..n {
            assert!((d[y] - 0.8).abs() < 1e-10);
        }
    }
}
