//! Rotation of the Bloch vector about the y-axis and a witness that the
//! induced evolution of the ontic state is not a function of the ontic state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cone::{ontic_support, QubitOnticState, THETA0};
use crate::error::{Error, Result};
use crate::geometry::{from_spherical, to_spherical, BlochVector, SphericalAngles};

/// Exact flow `dv_x/dt = v_z`, `dv_y/dt = 0`, `dv_z/dt = -v_x` for time `t`.
pub fn evolve_bloch(v: &BlochVector, t: f64) -> BlochVector {
    let (s, c) = t.sin_cos();
    BlochVector::from_unit_components(v.x() * c + v.z() * s, v.y(), v.z() * c - v.x() * s)
}

/// `(dphi/dt, dtheta/dt) = (-cot(theta) sin(phi), cos(phi))`.
pub fn spherical_rates(a: &SphericalAngles) -> Result<(f64, f64)> {
    let (st, ct) = a.theta.sin_cos();
    if st.abs() <= 1e-12 {
        return Err(Error::PoleSingularity { sin_theta: st });
    }
    let (sp, cp) = a.phi.sin_cos();
    Ok((-ct / st * sp, cp))
}

/// Signed azimuth difference folded into `(-pi, pi]`.
fn azimuth_delta(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Centered finite difference of the angles under the exact flow.
pub fn finite_difference_rates(a: &SphericalAngles, dt: f64) -> (f64, f64) {
    let v = from_spherical(a);
    let fwd = to_spherical(&evolve_bloch(&v, dt));
    let back = to_spherical(&evolve_bloch(&v, -dt));
    (
        azimuth_delta(fwd.phi, back.phi) / (2.0 * dt),
        (fwd.theta - back.theta) / (2.0 * dt),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessState {
    pub bloch: [f64; 3],
    pub phi: f64,
    /// Zenith-branch ontic state of the preparation.
    pub zenith_ontic: QubitOnticState,
    pub zenith_weight: f64,
    pub dtheta_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub theta: f64,
    pub a: WitnessState,
    pub b: WitnessState,
    /// `|cos phi_a - cos phi_b|`.
    pub discrepancy: f64,
}

impl WitnessReport {
    /// Both preparations share the zenith-branch ontic state bit for bit.
    pub fn shared_ontic_state(&self) -> bool {
        self.a.zenith_ontic.x.to_bits() == self.b.zenith_ontic.x.to_bits()
            && self.a.zenith_ontic.branch == self.b.zenith_ontic.branch
            && self.a.zenith_weight.to_bits() == self.b.zenith_weight.to_bits()
    }
}

/// Two states with the same zenith, hence the same zenith-branch ontic
/// state, whose zenith nevertheless moves at different rates.
pub fn non_markov_witness(theta: f64, phi_a: f64, phi_b: f64) -> Result<WitnessReport> {
    if !(theta > 0.0 && theta < THETA0) {
        return Err(Error::WitnessPrecondition(format!(
            "theta = {theta} must lie in (0, {THETA0})"
        )));
    }
    if !phi_a.is_finite() || !phi_b.is_finite() {
        return Err(Error::WitnessPrecondition("azimuths must be finite".into()));
    }
    if (phi_a.cos() - phi_b.cos()).abs() <= 1e-12 {
        return Err(Error::WitnessPrecondition(format!(
            "cos(phi_a) and cos(phi_b) coincide for phi_a = {phi_a}, phi_b = {phi_b}"
        )));
    }
    let state = |phi: f64| -> Result<WitnessState> {
        let angles = SphericalAngles::new(theta, phi)?;
        let [_, (zenith_weight, zenith_ontic)] = ontic_support(&angles);
        let (_, dtheta_dt) = spherical_rates(&angles)?;
        Ok(WitnessState {
            bloch: from_spherical(&angles).components(),
            phi: angles.phi,
            zenith_ontic,
            zenith_weight,
            dtheta_dt,
        })
    };
    let a = state(phi_a)?;
    let b = state(phi_b)?;
    Ok(WitnessReport {
        theta,
        discrepancy: (a.dtheta_dt - b.dtheta_dt).abs(),
        a,
        b,
    })
}
