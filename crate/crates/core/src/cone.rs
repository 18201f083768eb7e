//! The one-dimensional qubit model valid inside the cone `theta < arccos(3/5)`.
//!
//! A prepared state with angles `(theta, phi)` is represented by a single real
//! `x` and a branch bit: with probability `sin theta` the ontic state carries
//! the azimuth, otherwise it carries the zenith. Outcome probabilities for an
//! event `w` are functions of that one real only.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{to_spherical, BlochVector, SphericalAngles};

/// Half-aperture of the validity cone, `arccos(3/5)`.
pub const THETA0: f64 = 0.927_295_218_001_612_3;

/// Zenith-branch values with `sin x` this close to 1 are rejected.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

/// Which spherical angle the ontic real carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `n = 0`: `x` is the azimuth.
    Azimuth,
    /// `n = 1`: `x` is the zenith.
    Zenith,
}

impl Branch {
    pub fn index(self) -> u8 {
        match self {
            Branch::Azimuth => 0,
            Branch::Zenith => 1,
        }
    }

    pub fn from_index(n: u8) -> Option<Self> {
        match n {
            0 => Some(Branch::Azimuth),
            1 => Some(Branch::Zenith),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitOnticState {
    pub x: f64,
    pub branch: Branch,
}

impl QubitOnticState {
    pub fn azimuth(x: f64) -> Self {
        Self {
            x,
            branch: Branch::Azimuth,
        }
    }

    pub fn zenith(x: f64) -> Self {
        Self {
            x,
            branch: Branch::Zenith,
        }
    }
}

/// The two weighted delta positions of the ontic distribution for `angles`.
pub fn ontic_support(angles: &SphericalAngles) -> [(f64, QubitOnticState); 2] {
    let s = angles.theta.sin();
    [
        (s, QubitOnticState::azimuth(angles.phi)),
        (1.0 - s, QubitOnticState::zenith(angles.theta)),
    ]
}

pub fn sample_ontic<R: Rng + ?Sized>(v: &BlochVector, rng: &mut R) -> QubitOnticState {
    sample_ontic_angles(&to_spherical(v), rng)
}

pub fn sample_ontic_angles<R: Rng + ?Sized>(
    angles: &SphericalAngles,
    rng: &mut R,
) -> QubitOnticState {
    let u: f64 = rng.random();
    if u < angles.theta.sin() {
        QubitOnticState::azimuth(angles.phi)
    } else {
        QubitOnticState::zenith(angles.theta)
    }
}

fn check_in_cone(s: &QubitOnticState) -> Result<()> {
    if s.branch == Branch::Zenith {
        if s.x.is_nan() || s.x >= THETA0 {
            return Err(Error::OutOfCone {
                x: s.x,
                theta0: THETA0,
            });
        }
        if s.x.sin() >= 1.0 - DENOMINATOR_GUARD {
            return Err(Error::DegenerateDenominator { x: s.x });
        }
    } else if !s.x.is_finite() {
        return Err(Error::Config(format!("non-finite azimuth {}", s.x)));
    }
    Ok(())
}

/// Closed-form conditional probability for an event in the upper hemisphere.
fn upper_hemisphere(w: &BlochVector, s: &QubitOnticState) -> f64 {
    let r = (1.0 - w.z() * w.z()).max(0.0).sqrt();
    let (sx, cx) = s.x.sin_cos();
    match s.branch {
        Branch::Azimuth => 1.0 + (w.x() * cx + w.y() * sx - r) / 2.0,
        Branch::Zenith => (1.0 + (r - 2.0) * sx + w.z() * cx) / (2.0 - 2.0 * sx),
    }
}

/// Evaluates the model formula without the cone check.
///
/// Events with `w_z < 0` are the complement of `-w`; `w_z = 0` uses the direct
/// formula. Outside the cone the zenith branch can go negative, which is what
/// the positivity sweep probes.
pub fn conditional_probability_unchecked(w: &BlochVector, s: &QubitOnticState) -> f64 {
    if w.z() < 0.0 {
        1.0 - upper_hemisphere(&-*w, s)
    } else {
        upper_hemisphere(w, s)
    }
}

/// Probability that event `w` occurs given the ontic state `s`.
pub fn conditional_probability(w: &BlochVector, s: &QubitOnticState) -> Result<f64> {
    check_in_cone(s)?;
    Ok(conditional_probability_unchecked(w, s))
}

/// Exact outcome probability: the ontic weights times the conditionals.
pub fn exact_event_probability(v: &BlochVector, w: &BlochVector) -> Result<f64> {
    let angles = to_spherical(v);
    if angles.theta.is_nan() || angles.theta >= THETA0 {
        return Err(Error::OutOfCone {
            x: angles.theta,
            theta0: THETA0,
        });
    }
    let mut p = 0.0;
    for (weight, s) in ontic_support(&angles) {
        p += weight * conditional_probability(w, &s)?;
    }
    Ok(p)
}

/// Minimum over `x` and over `(w_x, w_y)` of the azimuth-branch probability at fixed `w_z`.
pub fn positivity_minimum_n0(wz: f64) -> f64 {
    1.0 - (1.0 - wz * wz).max(0.0).sqrt()
}

/// Deterministic near-uniform point set on the sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<BlochVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let (sp, cp) = (i as f64 * golden).sin_cos();
            BlochVector::from_unit_components(rho * cp, rho * sp, z)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub x: f64,
    pub event: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchExtremes {
    pub min: Extremum,
    pub max: Extremum,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub azimuth: BranchExtremes,
    pub zenith: BranchExtremes,
    /// Zenith branch at `x = theta0`, `w = +z`.
    pub boundary_value: f64,
    /// Zenith branch at `x = theta0 + 0.05`, `w = +z`.
    pub beyond_cone_value: f64,
}

impl PositivityReport {
    pub fn global_min(&self) -> f64 {
        self.azimuth.min.value.min(self.zenith.min.value)
    }

    pub fn global_max(&self) -> f64 {
        self.azimuth.max.value.max(self.zenith.max.value)
    }
}

/// Scans `branch` over `xs` against `events` using the unchecked formula.
pub fn sweep_branch(branch: Branch, xs: &[f64], events: &[BlochVector]) -> Option<BranchExtremes> {
    let mut out: Option<BranchExtremes> = None;
    for &x in xs {
        let s = QubitOnticState { x, branch };
        for w in events {
            let p = conditional_probability_unchecked(w, &s);
            let here = Extremum {
                value: p,
                x,
                event: w.components(),
            };
            match &mut out {
                None => {
                    out = Some(BranchExtremes {
                        min: here,
                        max: here,
                        evaluations: 1,
                    })
                }
                Some(e) => {
                    e.evaluations += 1;
                    if p < e.min.value {
                        e.min = here;
                    }
                    if p > e.max.value {
                        e.max = here;
                    }
                }
            }
        }
    }
    out
}

/// Grid points `0, step, 2 step, ...` strictly below `end`.
pub fn grid(step: f64, end: f64) -> Vec<f64> {
    (0..)
        .map(|i| i as f64 * step)
        .take_while(|&x| x < end)
        .collect()
}

/// Sweeps both branches over their validity domains against a Fibonacci event set.
pub fn sweep_positivity(x_grid_step: f64, n_event_points: usize) -> Result<PositivityReport> {
    if x_grid_step.is_nan() || x_grid_step <= 0.0 || !x_grid_step.is_finite() {
        return Err(Error::Config(format!(
            "grid step must be positive, got {x_grid_step}"
        )));
    }
    if n_event_points == 0 {
        return Err(Error::Config("event point count must be at least 1".into()));
    }
    let events = fibonacci_sphere(n_event_points);
    let azimuth = sweep_branch(Branch::Azimuth, &grid(x_grid_step, TAU), &events)
        .expect("grid contains x = 0");
    let zenith = sweep_branch(Branch::Zenith, &grid(x_grid_step, THETA0), &events)
        .expect("grid contains x = 0");
    let boundary_value =
        conditional_probability_unchecked(&BlochVector::NORTH, &QubitOnticState::zenith(THETA0));
    let beyond_cone_value = conditional_probability_unchecked(
        &BlochVector::NORTH,
        &QubitOnticState::zenith(THETA0 + 0.05),
    );
    Ok(PositivityReport {
        azimuth,
        zenith,
        boundary_value,
        beyond_cone_value,
    })
}
