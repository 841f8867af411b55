//! Markov kernels: dense finite chains and the rule-based lattice chains.

mod finite;
mod implicit;
mod io;

pub use finite::FiniteChain;
pub(crate) use finite::{condition_estimate, Checks};
pub use implicit::{UNIT_VECTORS, ImplicitChain, LineWalk, MmInf, PlaneWalk, RateKernel, ReflectedWalk, Site};
pub use io::{load_labels, load_matrix, parse_matrix};

use crate::error::{Error, Result};
use crate::stats::SeededStream;
use std::fmt::Debug;
use std::ops::Index;

/// A discrete-time transition rule.
pub trait Kernel: Sync {
    type State: Copy + Eq + Debug + Send;

    /// Every state reachable in one step with its probability.
    fn transitions(&self, x: Self::State) -> Vec<(Self::State, f64)>;

    /// One step drawn from the row of `x`.
    fn step(&self, x: Self::State, rng: &mut SeededStream) -> Self::State;
}

/// Nonnegative weights over `0..len`, possibly of infinite total mass in
/// the underlying model but always finite here.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
    normalized: bool,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Parameter(format!("weight {i} is {}", weights[i])));
        }
        Ok(Self {
            weights,
            normalized: false,
        })
    }

    /// A probability vector; total mass must be 1 within 1e-10.
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        let mut m = Self::new(weights)?;
        let total = m.mass();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter(format!("total mass {total} is not 1")));
        }
        m.normalized = true;
        Ok(m)
    }

    pub fn normalize(&self) -> Result<Self> {
        let total = self.mass();
        if !(total > 0.0) {
            return Err(Error::Parameter("cannot normalize a null measure".into()));
        }
        Self::probability(self.weights.iter().map(|w| w / total).collect())
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }
}

impl Index<usize> for Measure {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// `steps + 1` states starting at `start`.
pub fn sample_path<K: Kernel>(chain: &K, start: K::State, steps: usize, rng: &mut SeededStream) -> Vec<K::State> {
    let mut path = Vec::with_capacity(steps + 1);
    path.push(start);
    let mut x = start;
    for _ in 0..steps {
        x = chain.step(x, rng);
        path.push(x);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_validation() {
        assert!(Measure::new(vec![0.5, -0.1]).is_err());
        assert!(Measure::probability(vec![0.5, 0.4]).is_err());
        let m = Measure::new(vec![1.0, 3.0]).unwrap().normalize().unwrap();
        assert!(m.is_normalized());
        assert_eq!(m[1], 0.75);
    }

    #[test]
    fn zero_steps_is_start() {
        let mut rng = SeededStream::new(1, 1);
        assert_eq!(sample_path(&LineWalk, 5, 0, &mut rng), vec![5]);
    }

    #[test]
    fn same_seed_same_path() {
        let w = ReflectedWalk::new(0.3).unwrap();
        let a = sample_path(&w, 0, 1000, &mut SeededStream::new(3, 9));
        let b = sample_path(&w, 0, 1000, &mut SeededStream::new(3, 9));
        assert_eq!(a, b);
    }
}
