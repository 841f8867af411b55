//! Harmonic measure of the four unit vectors.
//!
//! `phi(x)` is the probability that the plane walk from `x` reaches `e1`
//! before the other three unit vectors. It is harmonic off `E`, 1 at `e1`
//! and 0 at `e-1, e2, e-2`. On a box of radius `R` the outer boundary is
//! held at 1/4: the walk is recurrent and from far away it hits each point
//! of `E` with probability close to 1/4, so this value keeps the truncation
//! bias at order `R^-2` instead of the order-one error a zero boundary
//! would give. The two-radius comparison measures what is left.
//!
//! The problem is symmetric under `x2 -> -x2`, so only the upper half
//! `x2 >= 0` is stored and the row below the axis is read through the
//! mirror. This makes the symmetry exact.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub truncation_radius: usize,
    /// Row-major over `x2 = 0..=R`, `x1 = -R..=R`.
    phi: Vec<f64>,
    pub r_same: f64,
    pub r_opposite: f64,
    pub r_perp: f64,
    /// Largest update of the final sweep.
    pub residual: f64,
    pub sweeps: usize,
    /// Largest update of the sweep at each checkpoint.
    pub residual_history: Vec<f64>,
}

impl DirichletSolution {
    fn width(&self) -> usize {
        2 * self.truncation_radius + 1
    }

    /// `phi` at any point of the box; points outside get the boundary value.
    pub fn phi(&self, x1: i64, x2: i64) -> f64 {
        let r = self.truncation_radius as i64;
        let y = x2.abs();
        if x1.abs() > r || y > r {
            return 0.25;
        }
        self.phi[y as usize * self.width() + (x1 + r) as usize]
    }

    /// Largest `|phi(x) - mean of neighbours|` over interior points off `E`.
    pub fn harmonic_defect(&self) -> f64 {
        let r = self.truncation_radius as i64;
        let mut worst = 0.0f64;
        for y in -r + 1..r {
            for x in -r + 1..r {
                if is_unit(x, y) {
                    continue;
                }
                let avg = 0.25
                    * (self.phi(x + 1, y) + self.phi(x - 1, y) + self.phi(x, y + 1) + self.phi(x, y - 1));
                worst = worst.max((self.phi(x, y) - avg).abs());
            }
        }
        worst
    }

    pub fn r_sum(&self) -> f64 {
        self.r_same + self.r_opposite + 2.0 * self.r_perp
    }
}

fn is_unit(x: i64, y: i64) -> bool {
    x.abs() + y.abs() == 1
}

/// SOR with the classical optimal factor for the square, in a fixed
/// lexicographic order. Stops once a whole sweep changes no value by more
/// than `tol`.
pub fn solve_dirichlet(radius: usize, tol: f64) -> Result<DirichletSolution> {
    solve_dirichlet_capped(radius, tol, 200 * radius + 10_000)
}

pub fn solve_dirichlet_capped(radius: usize, tol: f64, max_sweeps: usize) -> Result<DirichletSolution> {
    if radius < 20 {
        return Err(Error::Parameter(format!("Dirichlet radius must be >= 20, got {radius}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let r = radius as i64;
    let w = 2 * radius + 1;
    let idx = |x: i64, y: i64| y as usize * w + (x + r) as usize;
    let mut phi = vec![0.25; w * (radius + 1)];
    phi[idx(1, 0)] = 1.0;
    phi[idx(-1, 0)] = 0.0;
    phi[idx(0, 1)] = 0.0;

    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (2 * radius) as f64).sin());
    let checkpoint = radius.max(50);
    let mut history = Vec::new();
    let mut sweeps = 0;
    loop {
        let mut delta = 0.0f64;
        for y in 0..r {
            for x in -r + 1..r {
                if is_unit(x, y) {
                    continue;
                }
                let i = idx(x, y);
                let below = if y == 0 { phi[idx(x, 1)] } else { phi[i - w] };
                let avg = 0.25 * (phi[i - 1] + phi[i + 1] + phi[i + w] + below);
                let change = omega * (avg - phi[i]);
                phi[i] += change;
                delta = delta.max(change.abs());
            }
        }
        sweeps += 1;
        if sweeps % checkpoint == 0 {
            history.push(delta);
        }
        if delta < tol {
            history.push(delta);
            let mut s = DirichletSolution {
                truncation_radius: radius,
                phi,
                r_same: 0.0,
                r_opposite: 0.0,
                r_perp: 0.0,
                residual: delta,
                sweeps,
                residual_history: history,
            };
            let around = |c: (i64, i64)| {
                0.25 * (s.phi(c.0 + 1, c.1) + s.phi(c.0 - 1, c.1) + s.phi(c.0, c.1 + 1) + s.phi(c.0, c.1 - 1))
            };
            // r_{e1,f} by one step from e1, then rotate f onto e1
            let same = around((1, 0));
            let opposite = around((-1, 0));
            let perp = around((0, 1));
            s.r_same = same;
            s.r_opposite = opposite;
            s.r_perp = perp;
            return Ok(s);
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: delta,
            });
        }
    }
}

/// r values from two radii, the second twice the first, extrapolated under
/// an `R^-2` error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnKernel {
    pub r_same: f64,
    pub r_opposite: f64,
    pub r_perp: f64,
}

impl ReturnKernel {
    pub fn from_solution(s: &DirichletSolution) -> Self {
        Self {
            r_same: s.r_same,
            r_opposite: s.r_opposite,
            r_perp: s.r_perp,
        }
    }

    pub fn richardson(coarse: &DirichletSolution, fine: &DirichletSolution) -> Self {
        let ex = |a: f64, b: f64| (4.0 * b - a) / 3.0;
        Self {
            r_same: ex(coarse.r_same, fine.r_same),
            r_opposite: ex(coarse.r_opposite, fine.r_opposite),
            r_perp: ex(coarse.r_perp, fine.r_perp),
        }
    }

    /// Largest coordinate difference between the two solutions.
    pub fn spread(a: &DirichletSolution, b: &DirichletSolution) -> f64 {
        (a.r_same - b.r_same)
            .abs()
            .max((a.r_opposite - b.r_opposite).abs())
            .max((a.r_perp - b.r_perp).abs())
    }

    /// `r_{ef}` for unit vectors given as indices into [`super::E`].
    pub fn r(&self, e: usize, f: usize) -> f64 {
        let (a, b) = (super::E[e], super::E[f]);
        if a == b {
            self.r_same
        } else if a.0 == -b.0 && a.1 == -b.1 {
            self.r_opposite
        } else {
            self.r_perp
        }
    }
}
