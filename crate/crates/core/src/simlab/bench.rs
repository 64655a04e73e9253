//! Monte Carlo benchmark harness: runs the estimators over a grid of sample
//! sizes, records per-trial errors, and checks the deviation radii as
//! one-sided violation budgets.

use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matcore::{fro_norm, numerical_rank, op_norm};
use crate::robust_cov::{
    estimate_fixed_sigma, lepski_estimate, sample_cov, soft_threshold, LepskiConfig,
};
use crate::robust_mean::mom_min_samples;
use crate::simlab::mc::GroundTruth;
use crate::simlab::model::Model;
use crate::simlab::rng::mix_seed;

const TRIAL_STREAM: u64 = 0x747269616c; // "trial"

/// Rule for the soft-thresholding penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauRule {
    /// `tau = 36 sigma_0 sqrt(beta/m)`.
    Theory,
    /// `tau = c sigma_0 sqrt(beta/m)` for a custom multiplier `c`.
    Multiple(f64),
    /// Skip soft-thresholding.
    None,
}

impl TauRule {
    pub fn multiplier(&self) -> Option<f64> {
        match self {
            TauRule::Theory => Some(36.0),
            TauRule::Multiple(c) => Some(*c),
            TauRule::None => None,
        }
    }
}

impl std::fmt::Display for TauRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TauRule::Theory => write!(f, "theory"),
            TauRule::Multiple(c) => write!(f, "{c}"),
            TauRule::None => write!(f, "none"),
        }
    }
}

impl std::str::FromStr for TauRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(TauRule::Theory),
            "none" => Ok(TauRule::None),
            other => {
                let c: f64 = other.parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "tau_rule must be `theory`, `none`, or a positive number, got `{other}`"
                    ))
                })?;
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "tau_rule multiplier must be positive, got {c}"
                    )));
                }
                Ok(TauRule::Multiple(c))
            }
        }
    }
}

/// Benchmark configuration. `sigma_min`/`sigma_max` for the Lepski grid are
/// the given factors times the measured `sigma_0`.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub model: Model,
    pub model_id: String,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub beta: f64,
    pub sigma_min_factor: f64,
    pub sigma_max_factor: f64,
    pub tau_rule: TauRule,
    pub seed: u64,
    /// Monte Carlo sample count for the ground-truth oracles.
    pub gt_samples: usize,
    /// Direction count for the kurtosis oracle.
    pub gt_directions: usize,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl BenchConfig {
    pub fn new(model: Model, model_id: impl Into<String>) -> Self {
        BenchConfig {
            model,
            model_id: model_id.into(),
            m_grid: vec![1000],
            trials: 100,
            beta: 3.0,
            sigma_min_factor: 0.125,
            sigma_max_factor: 8.0,
            tau_rule: TauRule::Theory,
            seed: 0,
            gt_samples: 1_000_000,
            gt_directions: 200,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.m_grid.is_empty() {
            return Err(Error::Config("m_grid must be nonempty".into()));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::Config(format!(
                "beta must satisfy beta > 1, got {}",
                self.beta
            )));
        }
        if !(self.sigma_min_factor > 0.0 && self.sigma_max_factor >= self.sigma_min_factor) {
            return Err(Error::Config(format!(
                "sigma factors must satisfy 0 < sigma_min_factor <= sigma_max_factor, got {} and {}",
                self.sigma_min_factor, self.sigma_max_factor
            )));
        }
        let min_m = mom_min_samples(self.beta);
        let offending: Vec<usize> = self
            .m_grid
            .iter()
            .copied()
            .filter(|&m| m < min_m)
            .collect();
        if !offending.is_empty() {
            return Err(Error::Config(format!(
                "infeasible (m, beta) combinations: m in {offending:?} with beta = {} \
                 (median-of-means needs m >= {min_m})",
                self.beta
            )));
        }
        Ok(())
    }
}

/// One benchmark trial.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    /// Operator error of the fixed-sigma estimator at `sigma = sigma_0`.
    pub op_err_fixed: f64,
    /// Operator error of the Lepski-adaptive estimate.
    pub op_err_star: f64,
    /// Operator error of the plain sample covariance.
    pub op_err_sample: f64,
    /// Frobenius error of the soft-thresholded estimate, when computed.
    pub fro_err_soft: Option<f64>,
    pub j_star: usize,
    /// Wall-clock seconds; kept out of serialized reports so that repeated
    /// runs with the same seed produce byte-identical files.
    #[serde(skip)]
    pub wall_secs: f64,
}

/// Quantile summary of per-trial values.
#[derive(Clone, Debug, Serialize)]
pub struct Quantiles {
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

impl Quantiles {
    fn from_values(values: &[f64]) -> Quantiles {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Quantiles {
            q10: quantile(&v, 0.10),
            q25: quantile(&v, 0.25),
            median: quantile(&v, 0.50),
            q75: quantile(&v, 0.75),
            q90: quantile(&v, 0.90),
        }
    }
}

/// Per-`m` aggregate: error quantiles and violation frequencies against the
/// deviation radii, checked one-sidedly against their probability budgets.
#[derive(Clone, Debug, Serialize)]
pub struct MAggregate {
    pub m: usize,
    pub op_err_star: Quantiles,
    pub op_err_fixed: Quantiles,
    pub op_err_sample: Quantiles,
    pub fro_err_soft: Option<Quantiles>,
    /// Radius `3 sigma_0 sqrt(beta/m)` for the fixed-sigma estimator.
    pub radius_fixed: f64,
    /// Radius `18 sigma_0 sqrt(beta/m)` for the adaptive estimator.
    pub radius_star: f64,
    /// Squared Frobenius radius `162 sigma_0^2 (1+sqrt(2))^2 beta rank / m`.
    pub radius_soft_sq: Option<f64>,
    pub viol_freq_fixed: f64,
    pub viol_freq_star: f64,
    pub viol_freq_soft: Option<f64>,
    pub median_j_star: f64,
}

/// Full benchmark output.
#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub model_id: String,
    pub d: usize,
    pub beta: f64,
    pub trials: usize,
    pub m_grid: Vec<usize>,
    pub seed: u64,
    pub tau_rule: String,
    pub sigma0: f64,
    pub sigma0_sq: f64,
    pub sigma0_sq_se: f64,
    pub eff_rank: f64,
    pub dbar: f64,
    pub kurtosis_r: f64,
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Probability budget `5 d e^{-beta}` for the fixed-sigma radius.
    pub budget_fixed: f64,
    /// Probability budget `5 d log2(2 sigma_max / sigma_min) e^{-beta}`.
    pub budget_star: f64,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<MAggregate>,
}

fn run_trial(
    model: &Model,
    gt: &GroundTruth,
    lepski_cfg: &LepskiConfig,
    tau_mult: Option<f64>,
    m: usize,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let start = Instant::now();
    let beta = lepski_cfg.beta;
    let samples = model.sample(m, seed)?;
    let sigma0_mat = &gt.sigma0;
    let rate = (beta / m as f64).sqrt();

    let scov = sample_cov(&samples);
    let op_err_sample = op_norm(&(&scov - sigma0_mat))?;

    let fixed = estimate_fixed_sigma(&samples, gt.sigma0(), beta)?;
    let op_err_fixed = op_norm(&(&fixed.cov - sigma0_mat))?;

    let lepski = lepski_estimate(&samples, lepski_cfg)?;
    let op_err_star = op_norm(&(lepski.selected() - sigma0_mat))?;

    let fro_err_soft = match tau_mult {
        Some(c) => {
            let tau = c * gt.sigma0() * rate;
            let soft = soft_threshold(lepski.selected(), tau)?;
            Some(fro_norm(&(&soft - sigma0_mat)))
        }
        None => None,
    };

    Ok(TrialRecord {
        m,
        trial,
        seed,
        op_err_fixed,
        op_err_star,
        op_err_sample,
        fro_err_soft,
        j_star: lepski.j_star,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// Run the benchmark described by `config`. Deterministic given the master
/// seed and independent of the worker thread count.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let gt = GroundTruth::measure(
        &config.model,
        config.gt_samples,
        config.gt_directions,
        config.seed,
    )?;
    let sigma0 = gt.sigma0();
    let sigma_min = config.sigma_min_factor * sigma0;
    let sigma_max = config.sigma_max_factor * sigma0;
    let lepski_cfg = LepskiConfig {
        sigma_min,
        sigma_max,
        beta: config.beta,
    };
    lepski_cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let rank = numerical_rank(&gt.sigma0)?;
    let tau_mult = config.tau_rule.multiplier();

    let jobs: Vec<(usize, usize, usize)> = config
        .m_grid
        .iter()
        .enumerate()
        .flat_map(|(mi, &m)| (0..config.trials).map(move |t| (mi, m, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;

    let results: Vec<Result<TrialRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(mi, m, t)| {
                let seed = mix_seed(&[config.seed, TRIAL_STREAM, mi as u64, t as u64]);
                run_trial(&config.model, &gt, &lepski_cfg, tau_mult, m, t, seed)
            })
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        let rec = r?;
        if !(rec.op_err_star.is_finite() && rec.op_err_star >= 0.0) {
            return Err(Error::Numeric(format!(
                "non-finite trial error at m={}, trial={}",
                rec.m, rec.trial
            )));
        }
        records.push(rec);
    }

    let two = std::f64::consts::SQRT_2 + 1.0;
    let mut aggregates = Vec::with_capacity(config.m_grid.len());
    for &m in &config.m_grid {
        let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.m == m).collect();
        let rate = (config.beta / m as f64).sqrt();
        let radius_fixed = 3.0 * sigma0 * rate;
        let radius_star = 18.0 * sigma0 * rate;
        let radius_soft_sq = tau_mult.map(|_| {
            162.0 * gt.sigma0_sq * two * two * config.beta * rank as f64 / m as f64
        });
        let frac = |pred: &dyn Fn(&TrialRecord) -> bool| {
            rows.iter().filter(|r| pred(r)).count() as f64 / rows.len() as f64
        };
        let op_star: Vec<f64> = rows.iter().map(|r| r.op_err_star).collect();
        let op_fixed: Vec<f64> = rows.iter().map(|r| r.op_err_fixed).collect();
        let op_sample: Vec<f64> = rows.iter().map(|r| r.op_err_sample).collect();
        let soft: Vec<f64> = rows.iter().filter_map(|r| r.fro_err_soft).collect();
        let mut j_vals: Vec<f64> = rows.iter().map(|r| r.j_star as f64).collect();
        j_vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        aggregates.push(MAggregate {
            m,
            op_err_star: Quantiles::from_values(&op_star),
            op_err_fixed: Quantiles::from_values(&op_fixed),
            op_err_sample: Quantiles::from_values(&op_sample),
            fro_err_soft: if soft.is_empty() {
                None
            } else {
                Some(Quantiles::from_values(&soft))
            },
            radius_fixed,
            radius_star,
            radius_soft_sq,
            viol_freq_fixed: frac(&|r| r.op_err_fixed > radius_fixed),
            viol_freq_star: frac(&|r| r.op_err_star > radius_star),
            viol_freq_soft: radius_soft_sq.map(|rad| {
                frac(&|r| r.fro_err_soft.is_some_and(|e| e * e > rad))
            }),
            median_j_star: quantile(&j_vals, 0.5),
        });
    }

    let d = config.model.dim() as f64;
    let grid_card = (2.0 * sigma_max / sigma_min).log2();
    Ok(BenchReport {
        model_id: config.model_id.clone(),
        d: config.model.dim(),
        beta: config.beta,
        trials: config.trials,
        m_grid: config.m_grid.clone(),
        seed: config.seed,
        tau_rule: config.tau_rule.to_string(),
        sigma0,
        sigma0_sq: gt.sigma0_sq,
        sigma0_sq_se: gt.sigma0_sq_se,
        eff_rank: gt.eff_rank,
        dbar: gt.dbar,
        kurtosis_r: gt.kurtosis_r,
        rank,
        sigma_min,
        sigma_max,
        budget_fixed: 5.0 * d * (-config.beta).exp(),
        budget_star: 5.0 * d * grid_card * (-config.beta).exp(),
        records,
        aggregates,
    })
}
