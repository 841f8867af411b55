use num_complex::Complex64;

/// Empirical characteristic function at one frequency, with jackknife
/// standard errors of its real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharPoint {
    pub theta: f64,
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl CharPoint {
    /// Largest of the real/imaginary deviations from `target`, in units of
    /// the corresponding standard error.
    pub fn sigma_distance(&self, target: Complex64) -> f64 {
        let z = |d: f64, se: f64| {
            if se > 0.0 {
                d.abs() / se
            } else if d.abs() < 1e-15 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        z(self.value.re - target.re, self.se_re).max(z(self.value.im - target.im, self.se_im))
    }
}

fn jackknife_se(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let total: f64 = values.iter().sum();
    let mean = total / nf;
    let ss: f64 = values
        .iter()
        .map(|v| {
            let loo = (total - v) / (nf - 1.0);
            (loo - mean).powi(2)
        })
        .sum();
    ((nf - 1.0) / nf * ss).sqrt()
}

/// Mean of `exp(i theta X)` over the samples for each `theta`.
pub fn empirical_char_function(samples: &[f64], thetas: &[f64]) -> Vec<CharPoint> {
    let n = samples.len() as f64;
    thetas
        .iter()
        .map(|&theta| {
            let re: Vec<f64> = samples.iter().map(|x| (theta * x).cos()).collect();
            let im: Vec<f64> = samples.iter().map(|x| (theta * x).sin()).collect();
            CharPoint {
                theta,
                value: Complex64::new(re.iter().sum::<f64>() / n, im.iter().sum::<f64>() / n),
                se_re: jackknife_se(&re),
                se_im: jackknife_se(&im),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{oracle, SeededStream};

    #[test]
    fn theta_zero_is_one() {
        let xs = [1.0, -2.0, 3.5];
        let p = empirical_char_function(&xs, &[0.0])[0];
        assert_eq!(p.value, Complex64::new(1.0, 0.0));
        assert_eq!(p.sigma_distance(Complex64::new(1.0, 0.0)), 0.0);
    }

    #[test]
    fn symmetric_samples_have_small_imaginary_part() {
        let mut rng = SeededStream::new(11, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| oracle::brownian_at_local_time(1.0, &mut rng)).collect();
        for p in empirical_char_function(&xs, &[0.5, 1.0, 2.0]) {
            assert!(p.value.im.abs() < 3.0 * p.se_im, "{p:?}");
        }
    }

    #[test]
    fn laplace_oracle_matches_closed_form() {
        let (alpha0, t) = (1.3, 2.0);
        let mut rng = SeededStream::new(12, 0);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| oracle::bilateral_exponential(alpha0, t, &mut rng))
            .collect();
        for p in empirical_char_function(&xs, &[0.3, 0.8, 1.5]) {
            let target = Complex64::new(alpha0 * alpha0 / (alpha0 * alpha0 + p.theta * p.theta * t), 0.0);
            assert!(p.sigma_distance(target) < 3.0, "{p:?} vs {target}");
        }
    }

    #[test]
    fn jackknife_of_mean_is_classical_se() {
        let v = [1.0, 2.0, 4.0, 7.0];
        let s = crate::stats::Summary::of(&v);
        assert!((jackknife_se(&v) - s.se).abs() < 1e-12);
    }
}
