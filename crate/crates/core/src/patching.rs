//! Icosahedral patching: extends the cone model to every preparation.
//!
//! The sphere is split into the twelve Voronoi cells of the icosahedron
//! vertices. The preparer picks the nearest vertex `n_k`, rotates the state so
//! that `n_k` becomes `+z`, and runs the cone model in that frame. The patch
//! index travels with the ontic state so the measuring side can rotate the
//! event the same way.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{self, Branch, QubitOnticState};
use crate::error::{Error, Result};
use crate::geometry::{to_spherical, BlochVector, SphericalAngles};

pub const PATCH_COUNT: usize = 12;

/// Encoded size of a [`PatchedOnticState`]: `f64` LE, then `n: u8`, then `k: u8`.
pub const MESSAGE_LEN: usize = 10;

/// Edge length of the icosahedron inscribed in the unit sphere.
pub fn edge_length() -> f64 {
    4.0 / (10.0 + 2.0 * 5f64.sqrt()).sqrt()
}

/// Largest angle from any point of the sphere to its nearest vertex.
pub fn covering_radius() -> f64 {
    (edge_length() / 3f64.sqrt()).asin()
}

/// Proper rotation stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(pub [[f64; 3]; 3]);

impl Rotation3 {
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rodrigues rotation by `angle` about the unit `axis`.
    pub fn about_axis(axis: [f64; 3], angle: f64) -> Self {
        let [x, y, z] = axis;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Self([
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ])
    }

    /// Minimal-angle rotation carrying `from` onto `+z`.
    pub fn to_north(from: &BlochVector) -> Self {
        let c = from.cross(&BlochVector::NORTH);
        let s = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if s < 1e-15 {
            return if from.z() > 0.0 {
                Self::IDENTITY
            } else {
                // pi about x
                Self([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
            };
        }
        let angle = s.atan2(from.z());
        Self::about_axis([c[0] / s, c[1] / s, c[2] / s], angle)
    }

    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        let m = &self.0;
        let [x, y, z] = v.components();
        BlochVector::from_unit_components(
            m[0][0] * x + m[0][1] * y + m[0][2] * z,
            m[1][0] * x + m[1][1] * y + m[1][2] * z,
            m[2][0] * x + m[2][1] * y + m[2][2] * z,
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self(std::array::from_fn(|i| std::array::from_fn(|j| m[j][i])))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum())
        }))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Icosahedron vertices with the first on `+z`, and the rotation for each patch.
#[derive(Debug, Clone, PartialEq)]
pub struct IcosaFrame {
    vertices: [BlochVector; PATCH_COUNT],
    rotations: [Rotation3; PATCH_COUNT],
}

impl Default for IcosaFrame {
    fn default() -> Self {
        build_frame()
    }
}

impl IcosaFrame {
    /// Vertex `n_k`, `k` in `1..=12`.
    pub fn vertex(&self, k: usize) -> &BlochVector {
        &self.vertices[k - 1]
    }

    /// Rotation `O_k`, `k` in `1..=12`.
    pub fn rotation(&self, k: usize) -> &Rotation3 {
        &self.rotations[k - 1]
    }

    pub fn vertices(&self) -> &[BlochVector; PATCH_COUNT] {
        &self.vertices
    }
}

/// Builds the polar-oriented icosahedron: north pole, two staggered rings of
/// five at zenith `arccos(1/sqrt 5)` and its supplement, then the south pole.
pub fn build_frame() -> IcosaFrame {
    let ring_z = 1.0 / 5f64.sqrt();
    let ring_rho = 2.0 / 5f64.sqrt();
    let mut vertices = [BlochVector::NORTH; PATCH_COUNT];
    for j in 0..5 {
        let (s, c) = (TAU * j as f64 / 5.0).sin_cos();
        vertices[1 + j] = BlochVector::from_unit_components(ring_rho * c, ring_rho * s, ring_z);
        let (s, c) = (TAU * j as f64 / 5.0 + PI / 5.0).sin_cos();
        vertices[6 + j] = BlochVector::from_unit_components(ring_rho * c, ring_rho * s, -ring_z);
    }
    vertices[11] = BlochVector::SOUTH;
    let rotations = vertices.map(|v| Rotation3::to_north(&v));
    IcosaFrame {
        vertices,
        rotations,
    }
}

/// Index (1-based) of the vertex with the largest dot product; ties go to the lowest index.
pub fn assign_patch(frame: &IcosaFrame, v: &BlochVector) -> usize {
    let mut best = 0;
    let mut best_dot = frame.vertices[0].dot(v);
    for (i, n) in frame.vertices.iter().enumerate().skip(1) {
        let d = n.dot(v);
        if d > best_dot {
            best = i;
            best_dot = d;
        }
    }
    best + 1
}

/// The message the preparer sends: one real, the branch bit and the patch index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchedOnticState {
    pub x: f64,
    pub branch: Branch,
    pub patch: u8,
}

impl PatchedOnticState {
    pub fn ontic(&self) -> QubitOnticState {
        QubitOnticState {
            x: self.x,
            branch: self.branch,
        }
    }

    pub fn encode(&self) -> [u8; MESSAGE_LEN] {
        let mut out = [0u8; MESSAGE_LEN];
        out[..8].copy_from_slice(&self.x.to_le_bytes());
        out[8] = self.branch.index();
        out[9] = self.patch;
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bytes: &[u8; MESSAGE_LEN] = bytes.try_into().map_err(|_| {
            Error::Wire(format!("expected {MESSAGE_LEN} bytes, got {}", bytes.len()))
        })?;
        let x = f64::from_le_bytes(bytes[..8].try_into().expect("8-byte slice"));
        let branch = Branch::from_index(bytes[8])
            .ok_or_else(|| Error::Wire(format!("branch index {} not in {{0, 1}}", bytes[8])))?;
        let patch = bytes[9];
        if !(1..=PATCH_COUNT as u8).contains(&patch) {
            return Err(Error::Wire(format!("patch index {patch} not in 1..=12")));
        }
        let valid_x = match branch {
            Branch::Azimuth => (0.0..TAU).contains(&x),
            Branch::Zenith => (0.0..=covering_radius() + 1e-9).contains(&x),
        };
        if !valid_x {
            return Err(Error::Wire(format!(
                "ontic value {x} out of range for {branch:?}"
            )));
        }
        Ok(Self { x, branch, patch })
    }
}

/// The deterministic part of preparing `v`: its patch and its angles in the
/// patch frame. Reuse it to draw many ontic states for the same state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preparation {
    patch: usize,
    angles: SphericalAngles,
}

impl Preparation {
    pub fn new(frame: &IcosaFrame, v: &BlochVector) -> Self {
        let patch = assign_patch(frame, v);
        let angles = to_spherical(&frame.rotation(patch).apply(v));
        Self { patch, angles }
    }

    /// 1-based patch index.
    pub fn patch(&self) -> usize {
        self.patch
    }

    /// Angles of the state in its patch frame.
    pub fn angles(&self) -> &SphericalAngles {
        &self.angles
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PatchedOnticState {
        let s = cone::sample_ontic_angles(&self.angles, rng);
        PatchedOnticState {
            x: s.x,
            branch: s.branch,
            patch: self.patch as u8,
        }
    }
}

/// Rotates `v` into its patch frame and samples the cone model there.
pub fn prepare<R: Rng + ?Sized>(
    frame: &IcosaFrame,
    v: &BlochVector,
    rng: &mut R,
) -> PatchedOnticState {
    Preparation::new(frame, v).sample(rng)
}

fn patch_rotation<'a>(frame: &'a IcosaFrame, s: &PatchedOnticState) -> Result<&'a Rotation3> {
    let k = s.patch as usize;
    if !(1..=PATCH_COUNT).contains(&k) {
        return Err(Error::Wire(format!("patch index {k} not in 1..=12")));
    }
    Ok(frame.rotation(k))
}

/// Probability of event `w` given the received message.
pub fn measure_probability(
    frame: &IcosaFrame,
    w: &BlochVector,
    s: &PatchedOnticState,
) -> Result<f64> {
    let rotated = patch_rotation(frame, s)?.apply(w);
    cone::conditional_probability(&rotated, &s.ontic())
}

/// Exact outcome probability of the patched model for any `(v, w)`.
pub fn extended_exact_probability(frame: &IcosaFrame, v: &BlochVector, w: &BlochVector) -> f64 {
    let o = frame.rotation(assign_patch(frame, v));
    cone::exact_event_probability(&o.apply(v), &o.apply(w))
        .expect("nearest-vertex frame keeps every state inside the validity cone")
}

/// Samples the two-outcome measurement `{|w><w|, 1 - |w><w|}`; `true` means `w` occurred.
pub fn simulate_outcome<R: Rng + ?Sized>(
    frame: &IcosaFrame,
    w: &BlochVector,
    s: &PatchedOnticState,
    rng: &mut R,
) -> Result<bool> {
    let p = measure_probability(frame, w, s)?;
    let u: f64 = rng.random();
    Ok(u < p)
}

/// Zenith of `v` in its own patch frame.
pub fn rotated_zenith(frame: &IcosaFrame, v: &BlochVector) -> f64 {
    let k = assign_patch(frame, v);
    to_spherical(&frame.rotation(k).apply(v)).theta
}
