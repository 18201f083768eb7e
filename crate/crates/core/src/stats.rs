//! Hypothesis-test helpers for the Monte Carlo experiments.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// Probabilities within this distance of 0 or 1 are treated as deterministic.
pub const DEGENERATE_EPS: f64 = 1e-12;

pub fn is_degenerate(p: f64) -> bool {
    p <= DEGENERATE_EPS || p >= 1.0 - DEGENERATE_EPS
}

/// `(freq - p) sqrt(n) / sqrt(p (1 - p))`, or `None` when `p` is degenerate.
pub fn z_score(successes: u64, trials: u64, p: f64) -> Option<f64> {
    if trials == 0 || is_degenerate(p) {
        return None;
    }
    let n = trials as f64;
    let freq = successes as f64 / n;
    Some((freq - p) * n.sqrt() / (p * (1.0 - p)).sqrt())
}

/// Two-sided binomial p-value via the continuity-corrected normal approximation.
pub fn binomial_two_sided_p(successes: u64, trials: u64, p: f64) -> f64 {
    if is_degenerate(p) {
        let expected = if p < 0.5 { 0 } else { trials };
        return if successes == expected { 1.0 } else { 0.0 };
    }
    let n = trials as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    let dev = ((successes as f64 - n * p).abs() - 0.5).max(0.0);
    erfc(dev / sd / std::f64::consts::SQRT_2)
}

/// Two-sided critical |z| for a significance level.
pub fn critical_z(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against the standard normal.
pub fn ks_standard_normal(samples: &[f64]) -> KsResult {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let normal = Normal::standard();
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    // Stephens' small-sample correction to the asymptotic distribution.
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};

    #[test]
    fn z_score_definition() {
        assert_eq!(z_score(500, 1000, 0.5), Some(0.0));
        let z = z_score(600, 10_000, 0.05).unwrap();
        let expect = (0.06 - 0.05) * 100.0 / (0.05f64 * 0.95).sqrt();
        assert!((z - expect).abs() < 1e-12);
        assert_eq!(z_score(10, 10, 1.0), None);
        assert_eq!(z_score(0, 10, 0.0), None);
    }

    #[test]
    fn binomial_p_values() {
        assert!(binomial_two_sided_p(500_000, 1_000_000, 0.5) > 0.99);
        // 6 sigma away
        assert!(binomial_two_sided_p(503_000, 1_000_000, 0.5) < 1e-8);
        assert_eq!(binomial_two_sided_p(10, 10, 1.0), 1.0);
        assert_eq!(binomial_two_sided_p(9, 10, 1.0), 0.0);
    }

    #[test]
    fn critical_values() {
        assert!((critical_z(0.05) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((critical_z(1e-6) - 4.891_638_475_7).abs() < 1e-6);
    }

    #[test]
    fn kolmogorov_known_quantiles() {
        // Classical asymptotic critical values.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_normal_rejects_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let normal: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_standard_normal(&normal).p_value > 1e-3);
        let uni = Uniform::new(-2.0, 2.0).unwrap();
        let flat: Vec<f64> = (0..2000).map(|_| uni.sample(&mut rng)).collect();
        assert!(ks_standard_normal(&flat).p_value < 1e-3);
    }
}
