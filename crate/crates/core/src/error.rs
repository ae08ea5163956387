use thiserror::Error;

/// Errors raised by evaluation, verification and reconstruction routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("invalid period matrix: {0}")]
    InvalidPeriodMatrix(String),

    #[error("period matrix too close to the boundary: lambda_min(Im tau) = {lambda_min:e} < {floor:e}")]
    NearBoundary { lambda_min: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("characteristic of order {order} does not divide {modulus}")]
    OrderMismatch { order: u64, modulus: u64 },

    #[error("rational overflow in characteristic arithmetic")]
    RationalOverflow,

    #[error("cannot normalize projective point: all coordinates below {floor:e}")]
    ZeroProjectivePoint { floor: f64 },

    #[error("degenerate gradient frame: rank below {genus} (sigma_min/sigma_max = {ratio:e})")]
    DegenerateFrame { genus: usize, ratio: f64 },

    #[error("rank check needs at least {cols} rows, only {rows} available")]
    DimensionShortfall { rows: usize, cols: usize },

    #[error("ambiguous reconstruction: kernel gap {gap:e} below required {required:e}")]
    AmbiguousReconstruction { gap: f64, required: f64 },

    #[error("admissibility violated: {0}")]
    Inadmissible(String),

    #[error("all products vanish (max modulus {max_modulus:e})")]
    DegenerateProducts { max_modulus: f64 },

    #[error("vanishing denominator theta[0,delta](2n tau): |value| = {modulus:e}")]
    VanishingDenominator { modulus: f64 },

    #[error("tau-derivative routes disagree: relative difference {relative:e}")]
    CrossCheck { relative: f64 },

    #[error("insufficient data: {usable} usable samples, need {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ThetaError>;

impl From<std::io::Error> for ThetaError {
    fn from(e: std::io::Error) -> Self {
        ThetaError::Io(e.to_string())
    }
}
