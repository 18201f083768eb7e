//! Bloch-sphere and amplitude-vector mathematics.
//!
//! Bloch vectors represent both prepared qubit states and measurement events
//! (the projector onto `|w><w|`). Spherical angles follow the physics
//! convention: `theta` is the zenith measured from `+z`, `phi` the azimuth
//! measured from `+x` towards `+y`.

use std::f64::consts::{PI, TAU};
use std::ops::Neg;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|v|^2 - 1` accepted by the checked constructors.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Below this `sin(theta)` the azimuth is pinned to zero.
pub const POLE_EPSILON: f64 = 1e-14;

/// A unit 3-vector on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub const NORTH: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };
    pub const SOUTH: Self = Self {
        x: 0.0,
        y: 0.0,
        z: -1.0,
    };
    pub const X_AXIS: Self = Self {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const Y_AXIS: Self = Self {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };

    /// Builds a vector that must already be unit norm.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { x, y, z })
    }

    /// Rescales `(x, y, z)` onto the sphere. `None` for the zero vector.
    pub fn normalize(x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Skips the norm check. Callers guarantee unit norm up to rounding.
    pub(crate) const fn from_unit_components(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> [f64; 3] {
        [
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        ]
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    /// Great-circle angle in `[0, pi]`, accurate for nearly (anti)parallel pairs.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let c = self.cross(other);
        let sin = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        sin.atan2(self.dot(other))
    }
}

impl Neg for BlochVector {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Zenith `theta` in `[0, pi]` and azimuth `phi` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalAngles {
    pub theta: f64,
    pub phi: f64,
}

impl SphericalAngles {
    /// Wraps `phi` into `[0, 2 pi)` and checks `theta` is in `[0, pi]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::Config(format!(
                "zenith {theta} outside [0, pi] or non-finite azimuth {phi}"
            )));
        }
        Ok(Self {
            theta,
            phi: wrap_azimuth(phi),
        })
    }
}

/// Maps any finite angle into `[0, 2 pi)`.
pub fn wrap_azimuth(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn to_spherical(v: &BlochVector) -> SphericalAngles {
    let rho = v.x.hypot(v.y);
    let theta = rho.atan2(v.z);
    let phi = if theta.sin() < POLE_EPSILON {
        0.0
    } else {
        wrap_azimuth(v.y.atan2(v.x))
    };
    SphericalAngles { theta, phi }
}

pub fn from_spherical(a: &SphericalAngles) -> BlochVector {
    let (st, ct) = a.theta.sin_cos();
    let (sp, cp) = a.phi.sin_cos();
    BlochVector::from_unit_components(st * cp, st * sp, ct)
}

/// Born probability `(1 + v.w) / 2` of the event `w` for the state `v`.
pub fn born_probability_qubit(v: &BlochVector, w: &BlochVector) -> f64 {
    ((1.0 + v.dot(w)) / 2.0).clamp(0.0, 1.0)
}

/// Uniform point on the sphere: `vz` uniform on `[-1, 1]`, `phi` uniform.
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (sp, cp) = phi.sin_cos();
    BlochVector::from_unit_components(rho * cp, rho * sp, z)
}

/// Pure state of an N-level system, `N >= 2`, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    amplitudes: Vec<Complex64>,
}

impl AmplitudeVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amplitudes })
    }

    /// Divides by the Euclidean norm.
    pub fn normalize(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !n2.is_finite() || n2 == 0.0 {
            return Err(Error::NotNormalized(n2));
        }
        let inv = n2.sqrt().recip();
        for a in &mut amplitudes {
            *a *= inv;
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state `|index>` (0-based).
    pub fn basis(dimension: usize, index: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidDimension(dimension));
        }
        if index >= dimension {
            return Err(Error::Config(format!(
                "basis index {index} out of range for dimension {dimension}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dimension];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    /// Qubit state `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>` with Bloch vector `v`.
    pub fn from_bloch(v: &BlochVector) -> Self {
        let a = to_spherical(v);
        let (s, c) = (a.theta / 2.0).sin_cos();
        Self {
            amplitudes: vec![Complex64::new(c, 0.0), Complex64::from_polar(s, a.phi)],
        }
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `<self|other> = sum_n conj(self_n) other_n`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dims(self, other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

pub(crate) fn check_dims(a: &AmplitudeVector, b: &AmplitudeVector) -> Result<()> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    Ok(())
}

/// `|<phi|psi>|^2`.
pub fn born_probability_ndim(psi: &AmplitudeVector, phi: &AmplitudeVector) -> Result<f64> {
    Ok(phi.inner(psi)?.norm_sqr())
}

/// Haar-random state: independent standard complex Gaussians, normalized.
pub fn random_amplitudes<R: Rng + ?Sized>(
    dimension: usize,
    rng: &mut R,
) -> Result<AmplitudeVector> {
    if dimension < 2 {
        return Err(Error::InvalidDimension(dimension));
    }
    let raw = (0..dimension)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    AmplitudeVector::normalize(raw)
}
