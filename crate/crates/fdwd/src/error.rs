use thiserror::Error;

/// Errors surfaced by the library. CLI exit codes are derived from the
/// variant class: I/O, data validation, or solver failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("point {point} outside domain [{lo}, {hi}]")]
    OutOfDomain { point: f64, lo: f64, hi: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix not symmetric: max |M - M^T| = {0:.3e}")]
    NotSymmetric(f64),

    #[error("system matrix singular after ridge regularization")]
    SolverSingular,

    #[error("stratification failed: fold {fold} training split lacks class {class}")]
    Stratification { fold: usize, class: i8 },

    #[error("dataset contains a single class; two classes are required")]
    DegenerateLabels,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("covariate mismatch: model expects {expected} scalar covariates, got {got}")]
    CovariateMismatch { expected: usize, got: usize },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
