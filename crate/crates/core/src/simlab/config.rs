//! Flat key-value benchmark configuration files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment. Recognized
//! keys: `model` (gaussian | student_t | contaminated), `d`, `nu`, `eps`,
//! `outlier_norm`, `m_grid` (comma-separated), `trials`, `beta`,
//! `sigma_min_factor`, `sigma_max_factor`, `tau_rule`, `seed`, and the
//! optional `gt_samples` controlling the ground-truth Monte Carlo size.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matcore::SymMat;
use crate::simlab::bench::BenchConfig;
use crate::simlab::model::Model;

const KNOWN_KEYS: &[&str] = &[
    "model",
    "d",
    "nu",
    "eps",
    "outlier_norm",
    "m_grid",
    "trials",
    "beta",
    "sigma_min_factor",
    "sigma_max_factor",
    "tau_rule",
    "seed",
    "gt_samples",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        Error::InvalidArgument(format!("bad value `{value}` for key `{key}`"))
    })
}

/// Parse a flat key-value benchmark configuration.
pub fn parse_bench_config(text: &str) -> Result<BenchConfig> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            ))
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidArgument(format!("unknown key `{key}`")));
        }
        if kv.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate key `{key}`")));
        }
    }

    let get = |key: &str| -> Result<&String> {
        kv.get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("missing required key `{key}`")))
    };
    let reject_irrelevant = |keys: &[&str], model: &str| -> Result<()> {
        for &k in keys {
            if kv.contains_key(k) {
                return Err(Error::InvalidArgument(format!(
                    "key `{k}` is not valid for model `{model}`"
                )));
            }
        }
        Ok(())
    };

    let model_name = get("model")?.clone();
    let d: usize = parse_num("d", get("d")?)?;
    if d == 0 {
        return Err(Error::InvalidArgument("d must be positive".into()));
    }
    let model = match model_name.as_str() {
        "gaussian" => {
            reject_irrelevant(&["nu", "eps", "outlier_norm"], "gaussian")?;
            Model::gaussian(DVector::zeros(d), SymMat::identity(d))?
        }
        "student_t" => {
            reject_irrelevant(&["eps", "outlier_norm"], "student_t")?;
            let nu: f64 = parse_num("nu", get("nu")?)?;
            Model::student_t(DVector::zeros(d), SymMat::identity(d), nu)?
        }
        "contaminated" => {
            reject_irrelevant(&["nu"], "contaminated")?;
            let eps: f64 = parse_num("eps", get("eps")?)?;
            let norm: f64 = parse_num("outlier_norm", get("outlier_norm")?)?;
            let base = Model::gaussian(DVector::zeros(d), SymMat::identity(d))?;
            Model::contaminated(base, eps, norm)?
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown model `{other}` (expected gaussian, student_t, or contaminated)"
            )))
        }
    };

    let m_grid: Vec<usize> = get("m_grid")?
        .split(',')
        .map(|tok| parse_num("m_grid", tok))
        .collect::<Result<_>>()?;

    let mut cfg = BenchConfig::new(model, model_name);
    cfg.m_grid = m_grid;
    cfg.trials = parse_num("trials", get("trials")?)?;
    cfg.beta = parse_num("beta", get("beta")?)?;
    cfg.seed = parse_num("seed", get("seed")?)?;
    if let Some(v) = kv.get("sigma_min_factor") {
        cfg.sigma_min_factor = parse_num("sigma_min_factor", v)?;
    }
    if let Some(v) = kv.get("sigma_max_factor") {
        cfg.sigma_max_factor = parse_num("sigma_max_factor", v)?;
    }
    if let Some(v) = kv.get("tau_rule") {
        cfg.tau_rule = v.parse()?;
    }
    if let Some(v) = kv.get("gt_samples") {
        cfg.gt_samples = parse_num("gt_samples", v)?;
    }
    Ok(cfg)
}
