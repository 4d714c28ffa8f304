use thiserror::Error;

/// Errors shared by the geometry, spinor and scenario layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: representations are defined for n >= 2")]
    InvalidDimension(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("chirality operations require an even dimension (got n = {0})")]
    UnsupportedChirality(usize),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("point {point:?} leaves the chart domain (margin {margin})")]
    OutOfDomain { point: Vec<f64>, margin: f64 },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("zero spinor encountered at {0:?}")]
    ZeroSpinor(Vec<f64>),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("construction inconsistency: {0}")]
    ConstructionInconsistency(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
