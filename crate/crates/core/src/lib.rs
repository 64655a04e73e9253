//! Robust covariance estimation for heavy-tailed data.
//!
//! The estimator truncates the spectrum of each rank-one summand
//! `(X_i - mu)(X_i - mu)^T`, limiting the influence of outliers while staying
//! close to the sample covariance on well-behaved data. The mean is estimated
//! by median-of-means, the truncation level is selected adaptively by
//! Lepski's method, and an optional eigenvalue soft-thresholding step adapts
//! to low-rank structure. The `simlab` module provides synthetic models with
//! measured ground truth and a Monte Carlo harness that checks the deviation
//! radii as violation budgets.

pub mod error;
pub mod matcore;
pub mod robust_cov;
pub mod robust_mean;
pub mod samples;
pub mod simlab;

pub use error::{Error, Result};
pub use matcore::{
    effective_rank, fro_norm, matrix_function, nuclear_norm, numerical_rank, op_norm, psi,
    sym_eigen, trace, Eigen, SymMat,
};
pub use robust_cov::{
    estimate_fixed_sigma, lepski_estimate, pca_projector, sample_cov, soft_threshold,
    spectral_gap, subspace_dist, truncated_cov, truncation_ratio, FixedSigmaEstimate,
    LepskiConfig, LepskiReport,
};
pub use robust_mean::{
    geometric_median, median_of_means, mom_block_count, mom_min_samples, MoMResult,
};
pub use samples::Samples;

/// Convenience conversion from a confidence level `delta` to the parameter
/// `beta = ln(1/delta)`. Note that the probability budgets of the deviation
/// bounds carry dimension factors on top of `e^{-beta}`.
pub fn beta_from_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be in (0, 1), got {delta}"
        )));
    }
    Ok((1.0 / delta).ln())
}
