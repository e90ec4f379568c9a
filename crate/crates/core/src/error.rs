use thiserror::Error;

/// Errors raised by the laboratory. Dynamics-level events (breaking,
/// regime exit) are reported through return values, not through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} samples but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("point {point} lies outside the line domain [-{half_width}, {half_width}]")]
    OutOfDomain { point: f64, half_width: f64 },

    #[error("kernel argument outside the working regime: |eps*c| = {0} > 1/2")]
    KernelDomain(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fixed-point iteration stalled after {iterations} iterations (last update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("smallness condition violated: {0}")]
    Smallness(String),

    #[error("time step {dt} exceeds the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Short machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) | Error::LengthMismatch { .. } | Error::GridMismatch(_) => "grid",
            Error::NonFinite { .. } => "non-finite",
            Error::OutOfDomain { .. } => "domain",
            Error::KernelDomain(_) => "kernel-domain",
            Error::Precondition(_) => "precondition",
            Error::NoConvergence { .. } => "no-convergence",
            Error::Smallness(_) => "smallness",
            Error::Unstable { .. } => "unstable",
            Error::InvalidArgument(_) => "invalid-argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
