use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate (sin, cos) pair in {0}: both components are zero")]
    ZeroNormPair(&'static str),

    #[error("azimuth pair is not normalized (sin^2 + cos^2 = {0})")]
    NotNormalized(f64),

    #[error("{field} = {value} outside the open interval ({lo}, {hi})")]
    OutOfRange { field: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("degenerate azimuth: point lies on the ego origin")]
    DegenerateAzimuth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("brute-force oracle limit exceeded for a {rows}x{cols} matrix")]
    OracleLimit { rows: usize, cols: usize },

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("L1 kink at {field}: |difference| = {gap:e}")]
    Kink { field: &'static str, gap: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("schema error: {0}")]
    Schema(String),
}
