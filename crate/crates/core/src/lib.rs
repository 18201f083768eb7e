//! Compressed hidden-variable models of quantum preparation and measurement.
//!
//! * [`cone`] and [`patching`]: a qubit model whose ontic state carries a
//!   single real number, extended to the whole Bloch sphere with an
//!   icosahedral tessellation.
//! * [`ndim`]: an N-level model with a two-real-dimensional ontic state and
//!   its positivity region.
//! * [`dynamics`]: y-axis rotations and a non-Markovianity witness.
//! * [`harness`] and [`cli`]: exact and Monte Carlo verification against the
//!   Born rule.

pub mod cli;
pub mod cone;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod ndim;
pub mod patching;
pub mod stats;

pub use error::{Error, Result};
