use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be at least {min}, got {value}")]
    TooSmall {
        what: &'static str,
        value: usize,
        min: usize,
    },

    #[error("{what} exceeds supported size {max}, got {value}")]
    TooLarge {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("mode count must be even, got {0}")]
    OddModeCount(usize),

    #[error("matrix dimension must be even, got {0}")]
    OddDimension(usize),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not symmetric (deviation {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("interface mismatch: left end has {left} vertices, right begin has {right}")]
    InterfaceMismatch { left: usize, right: usize },

    #[error("schedule length {found} does not match term ({expected} measured vertices)")]
    ScheduleMismatch { expected: usize, found: usize },

    #[error("basis tag mismatch at measured vertex {0}")]
    BasisMismatch(usize),

    #[error("angle {angle} at position {index} is within 1e-6 of a pole of tan")]
    SingularAngle { index: usize, angle: f64 },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("term is not evaluable: {0}")]
    NotEvaluable(String),

    #[error("vertex {0} does not exist")]
    InvalidVertex(usize),

    #[error("cannot shorten vertex {vertex}: degree {degree} != 2")]
    ShorteningDegree { vertex: usize, degree: usize },

    #[error("end vertex {0} is not connected to any begin vertex")]
    DisconnectedEnd(usize),

    #[error("synthesis failed: {0}")]
    Synthesis(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("gaussian state has nonzero mean")]
    NonZeroMean,

    #[error("non-simulable regime: lambda_min(V - I/2) = {0:.6e} is not positive")]
    NotSimulable(f64),

    #[error("invalid photon pattern: {0}")]
    InvalidPattern(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
