use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid boundary specification: {0}")]
    InvalidBoundary(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("strict-ordering ball rejected: {reason} at ({x:.6}, {y:.6})")]
    StrictBallRejected { reason: String, x: f64, y: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("factorization breakdown at pivot {pivot} (shift {shift:e})")]
    Breakdown { pivot: usize, shift: f64 },

    #[error("mass matrix is not positive definite")]
    MassNotPositive,

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    #[error("eigensolver found {found} eigenvalues below {mu}, inertia certifies {expected}")]
    CountMismatch { found: usize, expected: usize, mu: f64 },

    #[error("subspace too large: {count} eigenvalues below {mu} exceed the limit {limit}")]
    TooManyEigenvalues { count: usize, limit: usize, mu: f64 },

    #[error("radial grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("extrapolation: {0}")]
    Extrapolation(String),

    #[error("config{}: {message}", if *line > 0 { format!(" line {line}") } else { String::new() })]
    Config { line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
