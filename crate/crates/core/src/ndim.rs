//! Two-real-dimension model for an N-level system.
//!
//! The ontic state is an index pair `(n, m)` drawn with weight `R(n, m)` plus
//! the complex number `X = conj(psi_n) psi_m`. An event `phi` then occurs with
//! probability `1 - |conj(phi_n) phi_m - X|^2 / (2 R(n, m))`, which is a valid
//! probability only inside the positivity region.
//!
//! Indices are 1-based throughout the public API; index 1 is the "ground"
//! level that [`WeightScheme::ground_weighted`] favours.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dims, random_amplitudes, AmplitudeVector};

/// Tolerance on `sum R(n, m) - 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Non-negative, normalized weights `R(n, m)` over the `N^2` index pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    dimension: usize,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightScheme {
    /// Row-major `N x N` matrix; every entry must be strictly positive.
    pub fn from_matrix(dimension: usize, weights: Vec<f64>) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidDimension(dimension));
        }
        if weights.len() != dimension * dimension {
            return Err(Error::InvalidWeights(format!(
                "expected {} entries, got {}",
                dimension * dimension,
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "entry {bad} is not strictly positive"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            dimension,
            weights,
            cumulative,
        })
    }

    /// `R(n, m) = 1 / N^2`.
    pub fn uniform(dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidDimension(dimension));
        }
        let w = 1.0 / (dimension * dimension) as f64;
        Self::from_matrix(dimension, vec![w; dimension * dimension])
    }

    /// Puts `pole_mass` evenly on the `2N - 1` cells of row 1 and column 1,
    /// and the rest evenly on the remaining `(N - 1)^2` cells.
    pub fn ground_weighted(dimension: usize, pole_mass: f64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidDimension(dimension));
        }
        if !(pole_mass > 0.0 && pole_mass < 1.0) {
            return Err(Error::InvalidPoleMass(pole_mass));
        }
        let pole = pole_mass / (2 * dimension - 1) as f64;
        let rest = (1.0 - pole_mass) / ((dimension - 1) * (dimension - 1)) as f64;
        let weights = (0..dimension * dimension)
            .map(|i| {
                if i / dimension == 0 || i % dimension == 0 {
                    pole
                } else {
                    rest
                }
            })
            .collect();
        Self::from_matrix(dimension, weights)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `R(n, m)` with 1-based indices.
    pub fn weight(&self, n: usize, m: usize) -> f64 {
        self.weights[(n - 1) * self.dimension + (m - 1)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The common value if every entry is equal.
    pub fn constant_value(&self) -> Option<f64> {
        let first = self.weights[0];
        self.weights.iter().all(|w| *w == first).then_some(first)
    }

    fn check(&self, psi: &AmplitudeVector) -> Result<()> {
        if psi.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                left: psi.dimension(),
                right: self.dimension,
            });
        }
        Ok(())
    }

    fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u: f64 = rng.random();
        let i = self
            .cumulative
            .partition_point(|c| *c <= u)
            .min(self.weights.len() - 1);
        (i / self.dimension + 1, i % self.dimension + 1)
    }
}

/// Ontic state `(n, m, X)` with 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdimOnticState {
    pub n: usize,
    pub m: usize,
    pub x: Complex64,
}

/// `conj(a_n) a_m` with 1-based indices.
fn bilinear(a: &AmplitudeVector, n: usize, m: usize) -> Complex64 {
    let amps = a.amplitudes();
    amps[n - 1].conj() * amps[m - 1]
}

pub fn sample_ndim<R: Rng + ?Sized>(
    psi: &AmplitudeVector,
    weights: &WeightScheme,
    rng: &mut R,
) -> Result<NdimOnticState> {
    weights.check(psi)?;
    let (n, m) = weights.sample_pair(rng);
    Ok(NdimOnticState {
        n,
        m,
        x: bilinear(psi, n, m),
    })
}

/// Raw conditional probability; negative outside the positivity region.
pub fn conditional_probability_ndim(
    phi: &AmplitudeVector,
    s: &NdimOnticState,
    weights: &WeightScheme,
) -> Result<f64> {
    weights.check(phi)?;
    let n = weights.dimension();
    if !(1..=n).contains(&s.n) || !(1..=n).contains(&s.m) {
        return Err(Error::Config(format!(
            "ontic indices ({}, {}) out of range 1..={n}",
            s.n, s.m
        )));
    }
    let d = (bilinear(phi, s.n, s.m) - s.x).norm_sqr();
    Ok(1.0 - d / (2.0 * weights.weight(s.n, s.m)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityCheck {
    pub holds: bool,
    /// `min over (n, m) of 2 R(n, m) - |conj(psi_n) psi_m - conj(phi_n) phi_m|^2`.
    pub margin: f64,
    /// The (n, m) attaining the margin, 1-based.
    pub worst: (usize, usize),
}

/// Strict positivity of every conditional probability on the support of `psi`.
pub fn positivity_check(
    psi: &AmplitudeVector,
    phi: &AmplitudeVector,
    weights: &WeightScheme,
) -> Result<PositivityCheck> {
    check_dims(psi, phi)?;
    weights.check(psi)?;
    let dim = weights.dimension();
    let mut margin = f64::INFINITY;
    let mut worst = (1, 1);
    for n in 1..=dim {
        for m in 1..=dim {
            let d = (bilinear(psi, n, m) - bilinear(phi, n, m)).norm_sqr();
            let here = 2.0 * weights.weight(n, m) - d;
            if here < margin {
                margin = here;
                worst = (n, m);
            }
        }
    }
    Ok(PositivityCheck {
        holds: margin > 0.0,
        margin,
        worst,
    })
}

/// Componentwise `|psi_n - phi_n|^2 < R / 2`, phases taken as given.
pub fn sufficient_condition(
    psi: &AmplitudeVector,
    phi: &AmplitudeVector,
    r_const: f64,
) -> Result<bool> {
    check_dims(psi, phi)?;
    Ok(psi
        .amplitudes()
        .iter()
        .zip(phi.amplitudes())
        .all(|(a, b)| (a - b).norm_sqr() < r_const / 2.0))
}

/// `sum R(n, m) P(phi | n, m, conj(psi_n) psi_m)` with no positivity gate.
pub fn weighted_conditional_sum(
    psi: &AmplitudeVector,
    phi: &AmplitudeVector,
    weights: &WeightScheme,
) -> Result<f64> {
    check_dims(psi, phi)?;
    weights.check(psi)?;
    let dim = weights.dimension();
    let mut total = 0.0;
    for n in 1..=dim {
        for m in 1..=dim {
            let s = NdimOnticState {
                n,
                m,
                x: bilinear(psi, n, m),
            };
            total += weights.weight(n, m) * conditional_probability_ndim(phi, &s, weights)?;
        }
    }
    Ok(total)
}

/// Exact event probability; refuses pairs outside the positivity region.
pub fn exact_event_probability_ndim(
    psi: &AmplitudeVector,
    phi: &AmplitudeVector,
    weights: &WeightScheme,
) -> Result<f64> {
    let check = positivity_check(psi, phi, weights)?;
    if !check.holds {
        return Err(Error::PositivityViolation {
            n: check.worst.0,
            m: check.worst.1,
            margin: check.margin,
        });
    }
    weighted_conditional_sum(psi, phi, weights)
}

/// Samples whether `phi` occurs; refuses ontic states with negative probability.
pub fn simulate_outcome_ndim<R: Rng + ?Sized>(
    phi: &AmplitudeVector,
    s: &NdimOnticState,
    weights: &WeightScheme,
    rng: &mut R,
) -> Result<bool> {
    let p = conditional_probability_ndim(phi, s, weights)?;
    if p < 0.0 {
        let r = weights.weight(s.n, s.m);
        return Err(Error::PositivityViolation {
            n: s.n,
            m: s.m,
            margin: 2.0 * r * p,
        });
    }
    let u: f64 = rng.random();
    Ok(u < p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InRegionPair {
    pub psi: AmplitudeVector,
    pub phi: AmplitudeVector,
    /// Candidates rejected before this pair was accepted.
    pub rejected: usize,
}

/// Uniform point of the complex disk of the given radius.
fn disk_point<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, a)
}

/// Haar-random `psi` and a componentwise disk perturbation `phi` inside the
/// positivity region, by rejection.
pub fn make_in_region_pair<R: Rng + ?Sized>(
    dimension: usize,
    weights: &WeightScheme,
    radius: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<InRegionPair> {
    if weights.dimension() != dimension {
        return Err(Error::DimensionMismatch {
            left: dimension,
            right: weights.dimension(),
        });
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Config(format!(
            "perturbation radius {radius} is invalid"
        )));
    }
    for attempt in 0..max_attempts {
        let psi = random_amplitudes(dimension, rng)?;
        let raw = psi
            .amplitudes()
            .iter()
            .map(|a| a + disk_point(radius, rng))
            .collect();
        let Ok(phi) = AmplitudeVector::normalize(raw) else {
            continue;
        };
        if positivity_check(&psi, &phi, weights)?.holds {
            return Ok(InRegionPair {
                psi,
                phi,
                rejected: attempt,
            });
        }
    }
    Err(Error::RegionSearchExhausted {
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::born_probability_ndim;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_state(a: &[f64]) -> AmplitudeVector {
        AmplitudeVector::normalize(a.iter().map(|x| c(*x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn weight_schemes() {
        let u = WeightScheme::uniform(2).unwrap();
        assert_eq!(u.weights(), &[0.25; 4]);
        assert_eq!(u.constant_value(), Some(0.25));

        let g = WeightScheme::ground_weighted(2, 0.6).unwrap();
        for (n, m) in [(1, 1), (1, 2), (2, 1)] {
            assert!((g.weight(n, m) - 0.2).abs() < 1e-15);
        }
        assert!((g.weight(2, 2) - 0.4).abs() < 1e-15);
        assert_eq!(g.constant_value(), None);

        for n in 2..10 {
            for s in [
                WeightScheme::uniform(n).unwrap(),
                WeightScheme::ground_weighted(n, 0.3).unwrap(),
            ] {
                assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                WeightScheme::ground_weighted(3, bad),
                Err(Error::InvalidPoleMass(_))
            ));
        }
        assert!(WeightScheme::uniform(1).is_err());
        assert!(WeightScheme::from_matrix(2, vec![0.5, 0.5, 0.0, 0.0]).is_err());
        assert!(WeightScheme::from_matrix(2, vec![0.3; 4]).is_err());
    }

    #[test]
    fn sampled_x_is_exact_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let e1 = AmplitudeVector::basis(2, 0).unwrap();
        let u = WeightScheme::uniform(2).unwrap();
        for _ in 0..100 {
            let s = sample_ndim(&e1, &u, &mut rng).unwrap();
            let expect = if (s.n, s.m) == (1, 1) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            };
            assert_eq!(s.x, expect);
        }
        let psi = random_amplitudes(5, &mut rng).unwrap();
        let g = WeightScheme::ground_weighted(5, 0.5).unwrap();
        for _ in 0..1000 {
            let s = sample_ndim(&psi, &g, &mut rng).unwrap();
            let a = psi.amplitudes();
            assert_eq!(s.x, a[s.n - 1].conj() * a[s.m - 1]);
        }
    }

    #[test]
    fn pair_frequencies_follow_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let g = WeightScheme::ground_weighted(3, 0.5).unwrap();
        let psi = random_amplitudes(3, &mut rng).unwrap();
        let draws = 1_000_000;
        let mut counts = [0u64; 9];
        for _ in 0..draws {
            let s = sample_ndim(&psi, &g, &mut rng).unwrap();
            counts[(s.n - 1) * 3 + (s.m - 1)] += 1;
        }
        for (i, &k) in counts.iter().enumerate() {
            let p = g.weights()[i];
            let sd = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (k as f64 - draws as f64 * p).abs() < 4.0 * sd,
                "cell {i}: {k}"
            );
        }
    }

    #[test]
    fn conditional_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let g = WeightScheme::ground_weighted(4, 0.4).unwrap();
        let psi = random_amplitudes(4, &mut rng).unwrap();
        for _ in 0..100 {
            let s = sample_ndim(&psi, &g, &mut rng).unwrap();
            assert_eq!(conditional_probability_ndim(&psi, &s, &g).unwrap(), 1.0);
        }
        let u = WeightScheme::uniform(2).unwrap();
        let e2 = AmplitudeVector::basis(2, 1).unwrap();
        let s = NdimOnticState {
            n: 1,
            m: 1,
            x: c(1.0, 0.0),
        };
        assert_eq!(conditional_probability_ndim(&e2, &s, &u).unwrap(), -1.0);
        let bad = NdimOnticState {
            n: 3,
            m: 1,
            x: c(0.0, 0.0),
        };
        assert!(conditional_probability_ndim(&e2, &bad, &u).is_err());
    }

    #[test]
    fn positivity_examples() {
        let u = WeightScheme::uniform(2).unwrap();
        let e1 = AmplitudeVector::basis(2, 0).unwrap();
        let e2 = AmplitudeVector::basis(2, 1).unwrap();
        let same = positivity_check(&e1, &e1, &u).unwrap();
        assert!(same.holds);
        assert_eq!(same.margin, 0.5);
        let opp = positivity_check(&e1, &e2, &u).unwrap();
        assert!(!opp.holds);
        assert_eq!(opp.margin, 0.5 - 1.0);
        assert_eq!(opp.worst, (1, 1));
        assert_eq!(
            exact_event_probability_ndim(&e1, &e2, &u),
            Err(Error::PositivityViolation {
                n: 1,
                m: 1,
                margin: -0.5
            })
        );
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let s = NdimOnticState {
            n: 1,
            m: 1,
            x: c(1.0, 0.0),
        };
        assert!(matches!(
            simulate_outcome_ndim(&e2, &s, &u, &mut rng),
            Err(Error::PositivityViolation { n: 1, m: 1, .. })
        ));
    }

    #[test]
    fn sufficient_condition_threshold_at_n2() {
        let threshold = 1.0 / (2.0 * 2f64.sqrt());
        let e1 = AmplitudeVector::basis(2, 0).unwrap();
        for (sin_a, expect) in [(threshold - 1e-6, true), (threshold + 1e-6, false)] {
            let cos_a = (1.0 - sin_a * sin_a).sqrt();
            let phi = real_state(&[cos_a, sin_a]);
            assert_eq!(sufficient_condition(&e1, &phi, 0.25).unwrap(), expect);
        }
        assert!(sufficient_condition(&e1, &e1, 0.25).unwrap());
        let e3 = AmplitudeVector::basis(3, 0).unwrap();
        assert!(sufficient_condition(&e1, &e3, 0.25).is_err());
    }

    #[test]
    fn exact_probability_matches_born_in_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let u = WeightScheme::uniform(3).unwrap();
        for _ in 0..200 {
            let pair = make_in_region_pair(3, &u, 0.05, 10_000, &mut rng).unwrap();
            let p = exact_event_probability_ndim(&pair.psi, &pair.phi, &u).unwrap();
            let born = born_probability_ndim(&pair.psi, &pair.phi).unwrap();
            assert!((p - born).abs() < 1e-12);
            assert!(
                (exact_event_probability_ndim(&pair.psi, &pair.psi, &u).unwrap() - 1.0).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn ungated_sum_is_born_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for n in [2, 3, 5] {
            let g = WeightScheme::ground_weighted(n, 0.7).unwrap();
            for _ in 0..200 {
                let psi = random_amplitudes(n, &mut rng).unwrap();
                let phi = random_amplitudes(n, &mut rng).unwrap();
                let sum = weighted_conditional_sum(&psi, &phi, &g).unwrap();
                let born = born_probability_ndim(&psi, &phi).unwrap();
                assert!((sum - born).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn region_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u = WeightScheme::uniform(2).unwrap();
        let mut accepted = 0;
        for _ in 0..1000 {
            if let Ok(pair) = make_in_region_pair(2, &u, 0.1, 1, &mut rng) {
                accepted += 1;
                assert!(positivity_check(&pair.psi, &pair.phi, &u).unwrap().holds);
                let n2: f64 = pair.phi.amplitudes().iter().map(|a| a.norm_sqr()).sum();
                assert!((n2 - 1.0).abs() < 1e-12);
            }
        }
        assert!(accepted > 0);
        let u8 = WeightScheme::uniform(8).unwrap();
        assert_eq!(
            make_in_region_pair(8, &u8, 50.0, 5, &mut rng),
            Err(Error::RegionSearchExhausted { attempts: 5 })
        );
        assert!(make_in_region_pair(3, &u, 0.1, 5, &mut rng).is_err());
    }
}
