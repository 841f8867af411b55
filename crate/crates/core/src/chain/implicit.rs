use super::{Checks, FiniteChain, Kernel};
use crate::error::{Error, Result};
use crate::stats::{bernoulli_threshold, SeededStream};
use rand::RngCore;

/// Simple symmetric walk on Z.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LineWalk;

impl Kernel for LineWalk {
    type State = i64;

    fn transitions(&self, x: i64) -> Vec<(i64, f64)> {
        vec![(x + 1, 0.5), (x - 1, 0.5)]
    }

    #[inline]
    fn step(&self, x: i64, rng: &mut SeededStream) -> i64 {
        if rng.next_u64() >> 63 == 1 {
            x + 1
        } else {
            x - 1
        }
    }
}

/// Simple symmetric walk on Z^2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlaneWalk;

pub const UNIT_VECTORS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

impl Kernel for PlaneWalk {
    type State = (i64, i64);

    fn transitions(&self, (a, b): (i64, i64)) -> Vec<((i64, i64), f64)> {
        UNIT_VECTORS.iter().map(|(u, v)| ((a + u, b + v), 0.25)).collect()
    }

    #[inline]
    fn step(&self, (a, b): (i64, i64), rng: &mut SeededStream) -> (i64, i64) {
        let (u, v) = UNIT_VECTORS[(rng.next_u64() >> 62) as usize];
        (a + u, b + v)
    }
}

/// Walk on N: up with probability `p`, down with `1 - p`, holding at 0
/// instead of going down.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectedWalk {
    p: f64,
    threshold: u64,
}

impl ReflectedWalk {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Parameter(format!("reflected walk needs 0 < p < 1/2, got {p}")));
        }
        Ok(Self {
            p,
            threshold: bernoulli_threshold(p),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p / (1 - p)`, the ratio of the geometric invariant law.
    pub fn rho(&self) -> f64 {
        self.p / (1.0 - self.p)
    }

    /// Raw-word up decision, shared by all fast simulation loops.
    #[inline]
    pub fn up(&self, rng: &mut SeededStream) -> bool {
        rng.next_u64() < self.threshold
    }

    /// Restriction to `{0, .., k}`; the up-move from `k` is held at `k`.
    pub fn truncated(&self, k: usize) -> Result<FiniteChain> {
        if k < 1 {
            return Err(Error::Parameter("truncation level must be at least 1".into()));
        }
        let n = k + 1;
        let mut p = vec![0.0; n * n];
        for x in 0..n {
            let up = if x < k { x + 1 } else { k };
            let down = x.saturating_sub(1);
            p[x * n + up] += self.p;
            p[x * n + down] += 1.0 - self.p;
        }
        FiniteChain::from_flat(
            n,
            p,
            Checks {
                allow_loops: true,
                reject_periodic: true,
            },
        )
    }
}

impl Kernel for ReflectedWalk {
    type State = u64;

    fn transitions(&self, x: u64) -> Vec<(u64, f64)> {
        if x == 0 {
            vec![(1, self.p), (0, 1.0 - self.p)]
        } else {
            vec![(x + 1, self.p), (x - 1, 1.0 - self.p)]
        }
    }

    #[inline]
    fn step(&self, x: u64, rng: &mut SeededStream) -> u64 {
        if self.up(rng) {
            x + 1
        } else {
            x.saturating_sub(1)
        }
    }
}

/// Jump rates of a continuous-time chain; the embedded jump chain is the
/// [`Kernel`] impl.
pub trait RateKernel: Kernel {
    /// Total jump rate `q_x` out of `x`.
    fn rate(&self, x: Self::State) -> f64;
}

/// The M/M/inf queue: up at rate `rho`, down at rate `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmInf {
    rho: f64,
}

impl MmInf {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("M/M/inf needs rho > 0, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn up_probability(&self, x: u64) -> f64 {
        self.rho / (self.rho + x as f64)
    }

    /// Embedded jump chain restricted to `{0, .., k}`, the up-move from `k`
    /// held at `k`.
    pub fn truncated_embedded(&self, k: usize) -> Result<FiniteChain> {
        let n = k + 1;
        let mut p = vec![0.0; n * n];
        for x in 0..n {
            let up = self.up_probability(x as u64);
            p[x * n + if x < k { x + 1 } else { k }] += up;
            if x > 0 {
                p[x * n + x - 1] += 1.0 - up;
            }
        }
        FiniteChain::from_flat(
            n,
            p,
            Checks {
                allow_loops: true,
                reject_periodic: false,
            },
        )
    }
}

impl Kernel for MmInf {
    type State = u64;

    fn transitions(&self, x: u64) -> Vec<(u64, f64)> {
        let up = self.up_probability(x);
        if x == 0 {
            vec![(1, 1.0)]
        } else {
            vec![(x + 1, up), (x - 1, 1.0 - up)]
        }
    }

    #[inline]
    fn step(&self, x: u64, rng: &mut SeededStream) -> u64 {
        if rng.open01() * (self.rho + x as f64) < self.rho {
            x + 1
        } else {
            x - 1
        }
    }
}

impl RateKernel for MmInf {
    #[inline]
    fn rate(&self, x: u64) -> f64 {
        self.rho + x as f64
    }
}

/// Lattice point; one-dimensional domains use the first coordinate only.
pub type Site = (i64, i64);

/// Rule-based kernel over a countable domain, selected at run time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ImplicitChain {
    Line,
    Plane,
    Reflected(ReflectedWalk),
    MmInf(MmInf),
}

impl ImplicitChain {
    pub fn name(&self) -> &'static str {
        match self {
            ImplicitChain::Line => "line",
            ImplicitChain::Plane => "plane",
            ImplicitChain::Reflected(_) => "reflected",
            ImplicitChain::MmInf(_) => "mminf",
        }
    }

    pub fn is_continuous_time(&self) -> bool {
        matches!(self, ImplicitChain::MmInf(_))
    }

    pub fn contains(&self, s: Site) -> bool {
        match self {
            ImplicitChain::Line => s.1 == 0,
            ImplicitChain::Plane => true,
            _ => s.0 >= 0 && s.1 == 0,
        }
    }

    /// `q_x` for continuous-time domains, 1 for the discrete ones.
    pub fn rate(&self, s: Site) -> f64 {
        match self {
            ImplicitChain::MmInf(m) => m.rate(s.0 as u64),
            _ => 1.0,
        }
    }
}

impl Kernel for ImplicitChain {
    type State = Site;

    fn transitions(&self, s: Site) -> Vec<(Site, f64)> {
        let lift = |v: Vec<(u64, f64)>| v.into_iter().map(|(x, w)| ((x as i64, 0), w)).collect();
        match self {
            ImplicitChain::Line => LineWalk.transitions(s.0).into_iter().map(|(x, w)| ((x, 0), w)).collect(),
            ImplicitChain::Plane => PlaneWalk.transitions(s),
            ImplicitChain::Reflected(r) => lift(r.transitions(s.0 as u64)),
            ImplicitChain::MmInf(m) => lift(m.transitions(s.0 as u64)),
        }
    }

    fn step(&self, s: Site, rng: &mut SeededStream) -> Site {
        match self {
            ImplicitChain::Line => (LineWalk.step(s.0, rng), 0),
            ImplicitChain::Plane => PlaneWalk.step(s, rng),
            ImplicitChain::Reflected(r) => (r.step(s.0 as u64, rng) as i64, 0),
            ImplicitChain::MmInf(m) => (m.step(s.0 as u64, rng) as i64, 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerated_rows_sum_to_one() {
        let chains = [
            ImplicitChain::Line,
            ImplicitChain::Plane,
            ImplicitChain::Reflected(ReflectedWalk::new(0.3).unwrap()),
            ImplicitChain::MmInf(MmInf::new(1.7).unwrap()),
        ];
        for c in chains {
            for x in 0..20 {
                let s: f64 = c.transitions((x, 0)).iter().map(|t| t.1).sum();
                assert!((s - 1.0).abs() < 1e-12, "{} at {x}", c.name());
            }
        }
    }

    #[test]
    fn reflected_rule() {
        let r = ReflectedWalk::new(0.3).unwrap();
        assert_eq!(r.transitions(0), vec![(1, 0.3), (0, 0.7)]);
        assert_eq!(r.transitions(4), vec![(5, 0.3), (3, 0.7)]);
        assert!(ReflectedWalk::new(0.5).is_err());
    }

    #[test]
    fn mminf_rates() {
        let m = MmInf::new(2.0).unwrap();
        assert_eq!(m.rate(3), 5.0);
        assert_eq!(m.up_probability(3), 0.4);
        assert_eq!(m.transitions(0), vec![(1, 1.0)]);
    }

    #[test]
    fn truncated_reflected_is_geometric() {
        let r = ReflectedWalk::new(0.3).unwrap();
        let rho = r.rho();
        for k in [50usize, 200] {
            let pi = r.truncated(k).unwrap().stationary().unwrap();
            let z: f64 = (0..=k).map(|x| rho.powi(x as i32)).sum();
            for x in 0..=k {
                assert!((pi[x] - rho.powi(x as i32) / z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_sensitivity_when_doubling() {
        let r = ReflectedWalk::new(0.3).unwrap();
        let a = r.truncated(200).unwrap().stationary().unwrap();
        let b = r.truncated(400).unwrap().stationary().unwrap();
        let d = (0..=200).map(|x| (a[x] - b[x]).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8);
    }
}
