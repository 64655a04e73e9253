use thiserror::Error;

/// Errors produced by the estimators and samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The sample is too small for the requested confidence parameter.
    #[error(
        "sample too small: median-of-means with beta={beta} needs at least \
         {required} rows (k = floor(3.5*beta)+1 blocks, m >= 2k), got {actual}"
    )]
    SampleSize {
        required: usize,
        actual: usize,
        beta: f64,
    },

    /// An iterative solver ran out of iterations. Carries the last iterate
    /// and a bound on the remaining objective gap.
    #[error("iteration did not converge after {iterations} steps (objective gap bound {gap:e})")]
    Convergence {
        iterations: usize,
        gap: f64,
        last_iterate: Vec<f64>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Spectral gap too small for a well-defined eigenprojector.
    #[error("degenerate spectrum: eigenvalues {lambda_k} and {lambda_k1} are too close")]
    DegenerateSpectrum { lambda_k: f64, lambda_k1: f64 },

    /// An infeasible benchmark or estimator configuration.
    #[error("infeasible configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
