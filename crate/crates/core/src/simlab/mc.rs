//! Monte Carlo oracles for the quantities the deviation bounds depend on:
//! the matrix variance `sigma_0^2`, the directional kurtosis bound, and the
//! directional fourth moment.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matcore::{effective_rank, op_norm, trace, SymMat};
use crate::simlab::model::Model;
use crate::simlab::rng::stream;

const MC_MIN_SAMPLES: usize = 10_000;
const JACKKNIFE_BLOCKS: usize = 100;

const MV_STREAM: u64 = 0x6d76; // "mv"
const DIR_STREAM: u64 = 0x646972; // "dir"
const GT_STREAM: u64 = 0x6774; // "gt"

/// A Monte Carlo point estimate with a jackknife standard error.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of the matrix variance
/// `sigma_0^2 = || E ||X - mu_0||^2 (X - mu_0)(X - mu_0)^T ||`.
///
/// The mean matrix is accumulated in blocks; the standard error comes from a
/// delete-one-block jackknife over the operator norms.
pub fn matrix_variance_mc(model: &Model, n: usize, seed: u64) -> Result<McEstimate> {
    if n < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "matrix_variance_mc: need n >= {MC_MIN_SAMPLES}, got {n}"
        )));
    }
    let d = model.dim();
    let mu0 = model.mu0();
    let per_block = n / JACKKNIFE_BLOCKS;
    let mut block_means: Vec<DMatrix<f64>> = Vec::with_capacity(JACKKNIFE_BLOCKS);
    for b in 0..JACKKNIFE_BLOCKS {
        let samples = model.sample(per_block, super::rng::mix_seed(&[seed, MV_STREAM, b as u64]))?;
        let mut acc = DMatrix::zeros(d, d);
        for i in 0..per_block {
            let z = samples.matrix().row(i).transpose() - &mu0;
            acc.ger(z.norm_squared(), &z, &z, 1.0);
        }
        block_means.push(acc / per_block as f64);
    }
    let mut total = DMatrix::zeros(d, d);
    for bm in &block_means {
        total += bm;
    }
    total /= JACKKNIFE_BLOCKS as f64;
    let value = op_norm(&SymMat::from_symmetric(total.clone()))?;

    // Delete-one-block jackknife on the operator norm.
    let b = JACKKNIFE_BLOCKS as f64;
    let mut loo = Vec::with_capacity(JACKKNIFE_BLOCKS);
    for bm in &block_means {
        let m = (&total * b - bm) / (b - 1.0);
        loo.push(op_norm(&SymMat::from_symmetric(m))?);
    }
    let mean_loo: f64 = loo.iter().sum::<f64>() / b;
    let var: f64 = loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>() * (b - 1.0) / b;
    Ok(McEstimate {
        value,
        std_err: var.sqrt(),
    })
}

fn random_unit_directions(d: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = stream(&[seed, DIR_STREAM]);
    (0..count)
        .map(|_| {
            loop {
                let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let n = v.norm();
                if n > 1e-12 {
                    v /= n;
                    return v;
                }
            }
        })
        .collect()
}

/// Maximum over random unit directions of the Monte Carlo estimate of
/// `sqrt(E <Z,v>^4) / E <Z,v>^2` with `Z = X - mu_0`. A lower bound on the
/// kurtosis constant `R`.
pub fn kurtosis_bound_mc(model: &Model, n: usize, directions: usize, seed: u64) -> Result<f64> {
    if n < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "kurtosis_bound_mc: need n >= {MC_MIN_SAMPLES}, got {n}"
        )));
    }
    if directions < 100 {
        return Err(Error::InvalidArgument(format!(
            "kurtosis_bound_mc: need at least 100 directions, got {directions}"
        )));
    }
    let samples = model.sample(n, seed)?;
    let mu0 = model.mu0();
    let centered = {
        let mut m = samples.matrix().clone();
        for i in 0..n {
            let row = m.row(i) - mu0.transpose();
            m.set_row(i, &row);
        }
        m
    };
    let mut best: Option<f64> = None;
    for v in random_unit_directions(model.dim(), directions, seed) {
        let t = &centered * &v;
        let m2: f64 = t.iter().map(|x| x * x).sum::<f64>() / n as f64;
        if m2 == 0.0 {
            continue;
        }
        let m4: f64 = t.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let r = m4.sqrt() / m2;
        best = Some(best.map_or(r, |b: f64| b.max(r)));
    }
    best.ok_or_else(|| {
        Error::Numeric("kurtosis_bound_mc: degenerate distribution in all directions".into())
    })
}

/// Maximum over random unit directions of the Monte Carlo estimate of
/// `E <Z,v>^4` with `Z = X - mu_0`. A lower bound on `B = sup_v E <v,X>^4`
/// for centered models.
pub fn directional_fourth_moment_mc(
    model: &Model,
    n: usize,
    directions: usize,
    seed: u64,
) -> Result<f64> {
    if n < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "directional_fourth_moment_mc: need n >= {MC_MIN_SAMPLES}, got {n}"
        )));
    }
    let samples = model.sample(n, seed)?;
    let mu0 = model.mu0();
    let mut best = 0.0f64;
    for v in random_unit_directions(model.dim(), directions.max(100), seed) {
        let mut m4 = 0.0;
        for i in 0..n {
            let z = samples.matrix().row(i).transpose() - &mu0;
            m4 += z.dot(&v).powi(4);
        }
        best = best.max(m4 / n as f64);
    }
    Ok(best)
}

/// Ground truth for a synthetic model: the target covariance and the
/// constants entering the deviation bounds. `sigma_0^2` and the kurtosis
/// bound are measured by Monte Carlo on the inlier (reference) distribution.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub mu0: DVector<f64>,
    pub sigma0: SymMat,
    /// Matrix variance `sigma_0^2` (Monte Carlo estimate).
    pub sigma0_sq: f64,
    /// Jackknife standard error of `sigma0_sq`.
    pub sigma0_sq_se: f64,
    /// Effective rank `tr(Sigma_0) / ||Sigma_0||`.
    pub eff_rank: f64,
    /// Intrinsic dimension `sigma_0^2 / ||Sigma_0||^2`.
    pub dbar: f64,
    /// Measured lower bound on the kurtosis constant `R`.
    pub kurtosis_r: f64,
}

impl GroundTruth {
    /// Measure ground truth with `n` Monte Carlo samples and `directions`
    /// random directions for the kurtosis bound.
    ///
    /// Construction verifies, within 3 standard errors, that
    /// `sigma_0^2 >= tr(Sigma_0) ||Sigma_0||` and the effective-rank sandwich
    /// `r ||Sigma_0||^2 <= sigma_0^2 <= R^2 r ||Sigma_0||^2`, and that
    /// `dbar >= 1`.
    pub fn measure(model: &Model, n: usize, directions: usize, seed: u64) -> Result<GroundTruth> {
        let reference = model.reference();
        let sigma0 = model.true_cov();
        let mv = matrix_variance_mc(reference, n, super::rng::mix_seed(&[seed, GT_STREAM, 1]))?;
        let kurt = kurtosis_bound_mc(
            reference,
            n,
            directions,
            super::rng::mix_seed(&[seed, GT_STREAM, 2]),
        )?;
        let op = op_norm(&sigma0)?;
        if op == 0.0 {
            return Err(Error::InvalidArgument(
                "GroundTruth: degenerate zero covariance".into(),
            ));
        }
        let eff = effective_rank(&sigma0)?;
        let dbar = mv.value / (op * op);
        let tol = 3.0 * mv.std_err;

        if mv.value < trace(&sigma0) * op - tol {
            return Err(Error::Numeric(format!(
                "GroundTruth: sigma0^2 = {} below tr*op = {} beyond tolerance",
                mv.value,
                trace(&sigma0) * op
            )));
        }
        if mv.value + tol < eff * op * op
            || mv.value > kurt * kurt * eff * op * op + tol
        {
            return Err(Error::Numeric(format!(
                "GroundTruth: sigma0^2 = {} escapes the effective-rank sandwich [{}, {}]",
                mv.value,
                eff * op * op,
                kurt * kurt * eff * op * op
            )));
        }
        if dbar + tol / (op * op) < 1.0 {
            return Err(Error::Numeric(format!(
                "GroundTruth: dbar = {dbar} below 1"
            )));
        }

        Ok(GroundTruth {
            mu0: model.mu0(),
            sigma0,
            sigma0_sq: mv.value,
            sigma0_sq_se: mv.std_err,
            eff_rank: eff,
            dbar,
            kurtosis_r: kurt,
        })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0_sq.sqrt()
    }
}
