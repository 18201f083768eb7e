use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The zenith-branch ontic value lies on or beyond the validity cone.
    #[error("ontic zenith {x} is outside the validity cone (must be < {theta0})")]
    OutOfCone { x: f64, theta0: f64 },

    #[error("zenith-branch denominator 2 - 2 sin x vanishes at x = {x}")]
    DegenerateDenominator { x: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("amplitude vector is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("pole mass must lie in (0, 1), got {0}")]
    InvalidPoleMass(f64),

    #[error("invalid weight scheme: {0}")]
    InvalidWeights(String),

    /// Positivity fails; carries the worst (n, m) pair (1-based) and its margin.
    #[error("positivity violated at (n={n}, m={m}) with margin {margin}")]
    PositivityViolation { n: usize, m: usize, margin: f64 },

    #[error("no in-region pair found after {attempts} attempts")]
    RegionSearchExhausted { attempts: usize },

    #[error("spherical rates are singular at the poles (sin theta = {sin_theta})")]
    PoleSingularity { sin_theta: f64 },

    #[error("witness precondition violated: {0}")]
    WitnessPrecondition(String),

    #[error("malformed ontic message: {0}")]
    Wire(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
