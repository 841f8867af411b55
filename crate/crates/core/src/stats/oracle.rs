//! Exact samplers and distribution functions for the limit laws used as
//! comparison targets.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

/// `|N(0, t)|`, the law of the Brownian local time at 0 at time `t`.
pub fn half_normal<R: Rng + ?Sized>(t: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (t.sqrt() * z).abs()
}

pub fn half_normal_cdf(t: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if t == 0.0 {
        1.0
    } else {
        erf(x / (2.0 * t).sqrt())
    }
}

/// `B1(L(t))`: an independent Brownian motion read at the local time at 0
/// of another one. Sampled as `L = |sqrt(t) Z2|`, `X = sqrt(L) Z1`.
pub fn brownian_at_local_time<R: Rng + ?Sized>(t: f64, rng: &mut R) -> f64 {
    let l = half_normal(t, rng);
    let z: f64 = rng.sample(StandardNormal);
    l.sqrt() * z
}

/// Laplace law with density `(a / 2 sqrt(t)) exp(-a |y| / sqrt(t))`.
pub fn bilateral_exponential<R: Rng + ?Sized>(alpha0: f64, t: f64, rng: &mut R) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let scale = t.sqrt() / alpha0;
    let u: f64 = rng.gen_range(-0.5..0.5);
    // inverse CDF; u = -0.5 has probability zero but maps to -inf
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

pub fn bilateral_exponential_cdf(alpha0: f64, t: f64, y: f64) -> f64 {
    if t == 0.0 {
        return if y >= 0.0 { 1.0 } else { 0.0 };
    }
    let b = t.sqrt() / alpha0;
    if y < 0.0 {
        0.5 * (y / b).exp()
    } else {
        1.0 - 0.5 * (-y / b).exp()
    }
}

pub fn exponential_cdf(mean: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x / mean).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_distance, mean_within_sigma, SeededStream, Summary};

    #[test]
    fn local_time_variance() {
        // Var(X) = E(L) = sqrt(2t/pi)
        let t = 2.0;
        let mut rng = SeededStream::new(5, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| brownian_at_local_time(t, &mut rng)).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let v = mean_within_sigma("var", &sq, (2.0 * t / std::f64::consts::PI).sqrt(), 3.0);
        assert!(v.pass, "{v}");
    }

    #[test]
    fn laplace_moments() {
        let (a, t) = (0.8, 1.5);
        let mut rng = SeededStream::new(6, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| bilateral_exponential(a, t, &mut rng)).collect();
        assert!(mean_within_sigma("mean", &xs, 0.0, 3.0).pass);
        let abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        assert!(mean_within_sigma("E|X|", &abs, t.sqrt() / a, 3.0).pass);
        let ks = ks_distance("cdf", &xs, |y| bilateral_exponential_cdf(a, t, y), 0.01).unwrap();
        assert!(ks.pass, "{ks}");
    }

    #[test]
    fn half_normal_matches_cdf() {
        let mut rng = SeededStream::new(7, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| half_normal(0.7, &mut rng)).collect();
        let ks = ks_distance("hn", &xs, |x| half_normal_cdf(0.7, x), 0.01).unwrap();
        assert!(ks.pass, "{ks}");
    }

    #[test]
    fn time_zero_is_point_mass() {
        let mut rng = SeededStream::new(8, 0);
        for _ in 0..100 {
            assert_eq!(half_normal(0.0, &mut rng), 0.0);
            assert_eq!(brownian_at_local_time(0.0, &mut rng), 0.0);
            assert_eq!(bilateral_exponential(1.0, 0.0, &mut rng), 0.0);
        }
        assert_eq!(Summary::of(&[0.0; 4]).mean, 0.0);
    }
}
