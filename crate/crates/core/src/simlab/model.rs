//! Synthetic data models with analytically known covariance targets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matcore::{sym_eigen, SymMat, PSD_TOL};
use crate::samples::Samples;
use crate::simlab::rng::stream;

const CONTAM_STREAM: u64 = 0x636f6e74; // "cont"

/// Symmetric PSD square root via eigendecomposition; tiny negative
/// eigenvalues are clamped to zero.
fn psd_sqrt(a: &SymMat) -> Result<DMatrix<f64>> {
    let e = sym_eigen(a)?;
    let op = e.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if let Some(&min) = e.values().last() {
        if min < -PSD_TOL * op {
            return Err(Error::InvalidArgument(format!(
                "matrix is not PSD (min eigenvalue {min:e})"
            )));
        }
    }
    Ok(e.recompose(|l| l.max(0.0).sqrt())?.into_matrix())
}

/// A sampling distribution with known ground truth.
#[derive(Clone, Debug)]
pub enum Model {
    /// Multivariate Gaussian with mean `mu0` and covariance `sigma0`.
    Gaussian { mu0: DVector<f64>, sigma0: SymMat },
    /// Multivariate Student-t as a scale mixture: `X = mu0 + Z sqrt(nu/W)`
    /// with `Z ~ N(0, scale)` and `W ~ chi^2(nu)`. Covariance is
    /// `(nu/(nu-2)) scale`; finite fourth moments require `nu > 4`.
    StudentT {
        mu0: DVector<f64>,
        scale: SymMat,
        nu: f64,
    },
    /// Each row of the base model is independently replaced with probability
    /// `eps` by a spike `outlier_norm * u` for a random unit direction `u`.
    /// The estimation target remains the base (inlier) covariance.
    Contaminated {
        base: Box<Model>,
        eps: f64,
        outlier_norm: f64,
    },
    /// Symmetric two-point distribution `+/- point` (mean zero).
    TwoPoint { point: DVector<f64> },
}

impl Model {
    pub fn gaussian(mu0: DVector<f64>, sigma0: SymMat) -> Result<Model> {
        if mu0.len() != sigma0.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma0.dim(),
                actual: mu0.len(),
            });
        }
        psd_sqrt(&sigma0)?;
        Ok(Model::Gaussian { mu0, sigma0 })
    }

    pub fn student_t(mu0: DVector<f64>, scale: SymMat, nu: f64) -> Result<Model> {
        if mu0.len() != scale.dim() {
            return Err(Error::DimensionMismatch {
                expected: scale.dim(),
                actual: mu0.len(),
            });
        }
        if !(nu.is_finite() && nu > 4.0) {
            return Err(Error::InvalidArgument(format!(
                "student_t: nu must exceed 4 so that fourth moments are finite, got {nu}"
            )));
        }
        psd_sqrt(&scale)?;
        Ok(Model::StudentT { mu0, scale, nu })
    }

    pub fn contaminated(base: Model, eps: f64, outlier_norm: f64) -> Result<Model> {
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::InvalidArgument(format!(
                "contaminated: eps must satisfy 0 <= eps < 0.5, got {eps}"
            )));
        }
        if !(outlier_norm.is_finite() && outlier_norm >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "contaminated: outlier_norm must be finite and nonnegative, got {outlier_norm}"
            )));
        }
        Ok(Model::Contaminated {
            base: Box::new(base),
            eps,
            outlier_norm,
        })
    }

    pub fn two_point(point: DVector<f64>) -> Result<Model> {
        if point.is_empty() {
            return Err(Error::InvalidArgument("two_point: empty point".into()));
        }
        Ok(Model::TwoPoint { point })
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Gaussian { mu0, .. } => mu0.len(),
            Model::StudentT { mu0, .. } => mu0.len(),
            Model::Contaminated { base, .. } => base.dim(),
            Model::TwoPoint { point } => point.len(),
        }
    }

    /// True mean of the inlier distribution.
    pub fn mu0(&self) -> DVector<f64> {
        match self {
            Model::Gaussian { mu0, .. } => mu0.clone(),
            Model::StudentT { mu0, .. } => mu0.clone(),
            Model::Contaminated { base, .. } => base.mu0(),
            Model::TwoPoint { point } => DVector::zeros(point.len()),
        }
    }

    /// The covariance the estimators target. For the contaminated model this
    /// is the base (inlier) covariance.
    pub fn true_cov(&self) -> SymMat {
        match self {
            Model::Gaussian { sigma0, .. } => sigma0.clone(),
            Model::StudentT { scale, nu, .. } => scale * (nu / (nu - 2.0)),
            Model::Contaminated { base, .. } => base.true_cov(),
            Model::TwoPoint { point } => {
                SymMat::from_symmetric(point * point.transpose())
            }
        }
    }

    /// The model sampled to estimate ground-truth quantities
    /// (`sigma_0^2`, kurtosis): the inlier distribution.
    pub fn reference(&self) -> &Model {
        match self {
            Model::Contaminated { base, .. } => base.reference(),
            other => other,
        }
    }

    /// Draw `m` i.i.d. rows. Deterministic in `seed`.
    pub fn sample(&self, m: usize, seed: u64) -> Result<Samples> {
        if m == 0 {
            return Err(Error::InvalidArgument("sample: m must be positive".into()));
        }
        let d = self.dim();
        match self {
            Model::Gaussian { mu0, sigma0 } => {
                let root = psd_sqrt(sigma0)?;
                let mut rng = stream(&[seed]);
                let mut data = DMatrix::zeros(m, d);
                for i in 0..m {
                    let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    data.set_row(i, &(mu0 + &root * g).transpose());
                }
                Samples::new(data)
            }
            Model::StudentT { mu0, scale, nu } => {
                let root = psd_sqrt(scale)?;
                let chi2 = ChiSquared::new(*nu).map_err(|e| {
                    Error::InvalidArgument(format!("chi-squared({nu}): {e}"))
                })?;
                let mut rng = stream(&[seed]);
                let mut data = DMatrix::zeros(m, d);
                for i in 0..m {
                    let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let w: f64 = chi2.sample(&mut rng);
                    let x = mu0 + &root * g * (nu / w).sqrt();
                    data.set_row(i, &x.transpose());
                }
                Samples::new(data)
            }
            Model::Contaminated {
                base,
                eps,
                outlier_norm,
            } => {
                let clean = base.sample(m, seed)?;
                let mut data = clean.matrix().clone();
                let mut rng = stream(&[seed, CONTAM_STREAM]);
                for i in 0..m {
                    if rng.gen::<f64>() < *eps {
                        // Spike of fixed norm in a uniform random direction.
                        let mut u =
                            DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                        let n = u.norm();
                        if n > 0.0 {
                            u /= n;
                        }
                        data.set_row(i, &(u * *outlier_norm).transpose());
                    }
                }
                Samples::new(data)
            }
            Model::TwoPoint { point } => {
                let mut rng = stream(&[seed]);
                let mut data = DMatrix::zeros(m, d);
                for i in 0..m {
                    let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    data.set_row(i, &(point * s).transpose());
                }
                Samples::new(data)
            }
        }
    }
}
