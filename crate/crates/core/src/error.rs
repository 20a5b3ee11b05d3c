use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate segment: endpoints coincide (length {0:e})")]
    DegenerateSegment(f64),

    #[error("line integral T({n},{q}) is outside the supported index set")]
    UnsupportedIndex { n: usize, q: i32 },

    #[error("line integral T({n},{q}) requested before its dependencies were computed")]
    MissingDependency { n: usize, q: i32 },

    #[error("{op} expects a {expected} load, got {got}")]
    LoadKindMismatch {
        op: &'static str,
        expected: &'static str,
        got: &'static str,
    },

    #[error("segment endpoint below or on the wall (heights {h0}, {h1})")]
    WallViolation { h0: f64, h1: f64 },

    #[error("filament mesh needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },

    #[error("ill-conditioned mobility system (1-norm condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target curvature undefined: A^2 k^2 = {0} must be below 1")]
    CurvatureDomain(f64),

    #[error("numerical blow-up at t = {time}: node speed {speed:e} exceeds bound {bound:e}")]
    BlowUp { time: f64, speed: f64, bound: f64 },

    #[error("director frame degenerated at node {node} (orthonormality drift {drift:e})")]
    FrameDegeneracy { node: usize, drift: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
