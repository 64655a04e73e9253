//! Covariance estimators for heavy-tailed data: the truncated estimator at a
//! fixed truncation level, its fixed-sigma wrapper, the Lepski-adaptive
//! estimator, eigenvalue soft-thresholding, PCA projectors, and the
//! truncation-ratio diagnostic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{op_norm, psi, sym_eigen, SymMat, PSD_TOL};
use crate::robust_mean::{median_of_means, MoMResult};
use crate::samples::Samples;

/// Truncated covariance estimator
/// `(1/(m theta)) sum_i psi(theta (X_i - mu)(X_i - mu)^T)`,
/// computed via its closed form: each summand is the rank-one matrix
/// `z z^T psi(theta ||z||^2) / (theta ||z||^2)` with `z = X_i - mu`.
/// Rows equal to `mu` contribute the zero matrix.
pub fn truncated_cov(samples: &Samples, mu_hat: &DVector<f64>, theta: f64) -> Result<SymMat> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncated_cov: theta must be finite and positive, got {theta}"
        )));
    }
    let d = samples.dim();
    if mu_hat.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: mu_hat.len(),
        });
    }
    let m = samples.m();
    let mut acc = DMatrix::zeros(d, d);
    for i in 0..m {
        let z = samples.matrix().row(i).transpose() - mu_hat;
        let n2 = z.norm_squared();
        if n2 == 0.0 {
            continue;
        }
        // psi(theta n2) / (theta n2) = min(n2, 1/theta) / n2
        let w = psi(theta * n2)? / (theta * n2);
        acc.ger(w, &z, &z, 1.0);
    }
    acc /= m as f64;
    Ok(SymMat::from_symmetric(acc))
}

/// Plain sample covariance `(1/m) sum (X_i - xbar)(X_i - xbar)^T`,
/// the non-robust baseline.
pub fn sample_cov(samples: &Samples) -> SymMat {
    let m = samples.m();
    let d = samples.dim();
    let mean: DVector<f64> = samples.matrix().row_mean().transpose();
    let mut acc = DMatrix::zeros(d, d);
    for i in 0..m {
        let z = samples.matrix().row(i).transpose() - &mean;
        acc.ger(1.0, &z, &z, 1.0);
    }
    acc /= m as f64;
    SymMat::from_symmetric(acc)
}

/// The truncated estimator at a fixed variance level, with its diagnostics.
#[derive(Clone, Debug)]
pub struct FixedSigmaEstimate {
    pub cov: SymMat,
    /// Truncation level `theta = (1/sigma) sqrt(beta/m)`.
    pub theta: f64,
    pub mom: MoMResult,
}

/// Truncated covariance with `mu` from median-of-means and
/// `theta = (1/sigma) sqrt(beta/m)`.
pub fn estimate_fixed_sigma(
    samples: &Samples,
    sigma: f64,
    beta: f64,
) -> Result<FixedSigmaEstimate> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "estimate_fixed_sigma: sigma must be finite and positive, got {sigma}"
        )));
    }
    let mom = median_of_means(samples, beta)?;
    let theta = (beta / samples.m() as f64).sqrt() / sigma;
    let cov = truncated_cov(samples, &mom.mu_hat, theta)?;
    Ok(FixedSigmaEstimate { cov, theta, mom })
}

/// Configuration for the Lepski-adaptive estimator: crude bounds
/// `sigma_min <= sigma_0 <= sigma_max` and the confidence parameter.
#[derive(Clone, Copy, Debug)]
pub struct LepskiConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub beta: f64,
}

impl LepskiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min.is_finite() && self.sigma_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "LepskiConfig: sigma_min must be finite and positive, got {}",
                self.sigma_min
            )));
        }
        if !(self.sigma_max.is_finite() && self.sigma_max >= self.sigma_min) {
            return Err(Error::InvalidArgument(format!(
                "LepskiConfig: sigma_max must be finite and >= sigma_min, got {}",
                self.sigma_max
            )));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "LepskiConfig: beta must satisfy beta > 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// The geometric grid `sigma_j = sigma_min 2^j` truncated at
    /// `sigma_j < 2 sigma_max`; always contains `j = 0`.
    pub fn grid(&self) -> Vec<f64> {
        let mut sigmas = vec![self.sigma_min];
        let mut j = 1;
        loop {
            let s = self.sigma_min * 2f64.powi(j);
            if s >= 2.0 * self.sigma_max {
                break;
            }
            sigmas.push(s);
            j += 1;
        }
        sigmas
    }
}

/// Output of [`lepski_estimate`]: the full grid, per-level estimates, the
/// selected index and the pairwise distance diagnostics.
#[derive(Clone, Debug)]
pub struct LepskiReport {
    /// Grid levels `sigma_j`, strictly increasing by factor 2.
    pub sigmas: Vec<f64>,
    /// Matching truncation levels `theta_j = (1/sigma_j) sqrt(beta/m)`.
    pub thetas: Vec<f64>,
    /// Per-level estimates, one per grid entry.
    pub estimates: Vec<SymMat>,
    /// Selected grid index.
    pub j_star: usize,
    /// `distances[j][i]` is the operator distance between the estimates at
    /// grid indices `j + 1 + i` and `j`.
    pub distances: Vec<Vec<f64>>,
    /// The shared mean estimate used at every level.
    pub mom: MoMResult,
    pub beta: f64,
    pub m: usize,
}

impl LepskiReport {
    /// The adaptive estimate, `estimates[j_star]`.
    pub fn selected(&self) -> &SymMat {
        &self.estimates[self.j_star]
    }
}

/// Lepski-adaptive covariance estimator: computes the truncated estimator on
/// the geometric grid of variance levels (with a single shared median-of-means
/// mean) and selects the smallest level consistent with all coarser levels
/// within radius `6 sigma_k sqrt(beta/m)`. The condition is vacuous at the
/// maximal index, so a selection always exists.
pub fn lepski_estimate(samples: &Samples, config: &LepskiConfig) -> Result<LepskiReport> {
    config.validate()?;
    let m = samples.m();
    let beta = config.beta;
    let mom = median_of_means(samples, beta)?;
    let rate = (beta / m as f64).sqrt();

    let sigmas = config.grid();
    let thetas: Vec<f64> = sigmas.iter().map(|s| rate / s).collect();
    let mut estimates = Vec::with_capacity(sigmas.len());
    for &theta in &thetas {
        estimates.push(truncated_cov(samples, &mom.mu_hat, theta)?);
    }

    let n = sigmas.len();
    let mut distances: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n - j - 1);
        for k in (j + 1)..n {
            row.push(op_norm(&(&estimates[k] - &estimates[j]))?);
        }
        distances.push(row);
    }

    // Ties at the threshold count as satisfying the condition.
    let mut j_star = n - 1;
    for (j, row) in distances.iter().enumerate() {
        let admissible = row
            .iter()
            .zip((j + 1)..n)
            .all(|(dist, k)| *dist <= 6.0 * sigmas[k] * rate);
        if admissible {
            j_star = j;
            break;
        }
    }

    Ok(LepskiReport {
        sigmas,
        thetas,
        estimates,
        j_star,
        distances,
        mom,
        beta,
        m,
    })
}

/// Eigenvalue soft-thresholding: replaces each eigenvalue `lambda_i` by
/// `max(lambda_i - tau/2, 0)`. This is the minimizer of
/// `||A - Sigma||_F^2 + tau ||A||_1` over symmetric `A`.
pub fn soft_threshold(sigma: &SymMat, tau: f64) -> Result<SymMat> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "soft_threshold: tau must be finite and nonnegative, got {tau}"
        )));
    }
    sym_eigen(sigma)?.recompose(|l| (l - tau / 2.0).max(0.0))
}

/// Orthogonal projector onto the span of the top-`k` eigenvectors.
///
/// Requires the spectral gap `lambda_k - lambda_{k+1}` to exceed
/// `PSD_TOL * ||Sigma||`; for `k = d` the projector is the identity and no
/// gap is involved.
pub fn pca_projector(sigma: &SymMat, k: usize) -> Result<SymMat> {
    let d = sigma.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!(
            "pca_projector: k must be in 1..={d}, got {k}"
        )));
    }
    let e = sym_eigen(sigma)?;
    if k < d {
        let op = e.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let gap = e.values()[k - 1] - e.values()[k];
        if gap <= PSD_TOL * op {
            return Err(Error::DegenerateSpectrum {
                lambda_k: e.values()[k - 1],
                lambda_k1: e.values()[k],
            });
        }
    }
    let mut p = DMatrix::zeros(d, d);
    for i in 0..k {
        let v = e.vectors().column(i);
        p.ger(1.0, &v, &v, 1.0);
    }
    Ok(SymMat::from_symmetric(p))
}

/// Spectral gap `lambda_k - lambda_{k+1}` of a symmetric matrix.
pub fn spectral_gap(sigma: &SymMat, k: usize) -> Result<f64> {
    let d = sigma.dim();
    if k == 0 || k >= d {
        return Err(Error::InvalidArgument(format!(
            "spectral_gap: k must be in 1..{d}, got {k}"
        )));
    }
    let e = sym_eigen(sigma)?;
    Ok(e.values()[k - 1] - e.values()[k])
}

/// Operator-norm distance between two projectors of equal trace.
pub fn subspace_dist(p1: &SymMat, p2: &SymMat) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            expected: p1.dim(),
            actual: p2.dim(),
        });
    }
    let t1 = crate::matcore::trace(p1);
    let t2 = crate::matcore::trace(p2);
    if (t1 - t2).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "subspace_dist: projector traces differ ({t1} vs {t2})"
        )));
    }
    op_norm(&(p1 - p2))
}

/// The ratio `h_mu(z)` comparing the truncation weight of `z - mu` to that of
/// `z`:
/// `[(||z-mu||^2 ∧ 1/theta) / ||z-mu||^2] / [(||z||^2 ∧ 1/theta) / ||z||^2]`.
pub fn truncation_ratio(z: &DVector<f64>, mu: &DVector<f64>, theta: f64) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncation_ratio: theta must be finite and positive, got {theta}"
        )));
    }
    if z.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            actual: mu.len(),
        });
    }
    let nz = z.norm_squared();
    let nd = (z - mu).norm_squared();
    if nz == 0.0 || nd == 0.0 {
        return Err(Error::InvalidArgument(
            "truncation_ratio: z and z - mu must be nonzero".into(),
        ));
    }
    let cap = 1.0 / theta;
    Ok((nd.min(cap) / nd) / (nz.min(cap) / nz))
}
