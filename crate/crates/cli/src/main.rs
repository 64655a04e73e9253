//! `heavycov`: robust covariance estimation from CSV data, robust PCA, and
//! benchmark runs, with machine-readable JSON reports.
//!
//! Exit codes: 2 input error, 3 infeasible configuration, 4 degenerate
//! spectrum, 5 numeric failure.

mod csvio;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heavycov::{
    lepski_estimate, op_norm, pca_projector, sample_cov, soft_threshold, spectral_gap, sym_eigen,
    trace, Error, LepskiConfig, LepskiReport, Samples, SymMat,
};
use serde::Serialize;

/// Environment variable selecting the benchmark worker thread count.
const THREADS_ENV: &str = "HEAVYCOV_THREADS";

#[derive(Parser)]
#[command(name = "heavycov", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a robust covariance matrix from a CSV file.
    Estimate(EstimateArgs),
    /// Estimate a robust covariance matrix and its top-k eigenprojector.
    Pca(PcaArgs),
    /// Run a synthetic benchmark described by a key-value config file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV (rows = observations; optional header auto-detected).
    input: PathBuf,
    /// Confidence parameter beta > 1 (beta = ln(1/delta)).
    #[arg(long)]
    beta: f64,
    /// Lower bound of the sigma grid; default sqrt(tr(S)*||S||)/8 from the
    /// sample covariance S.
    #[arg(long)]
    sigma_min: Option<f64>,
    /// Upper bound of the sigma grid; default 8*sqrt(m)*||S||.
    #[arg(long)]
    sigma_max: Option<f64>,
    /// Soft-thresholding level; when set the report adds the thresholded
    /// estimate and its eigenvalues.
    #[arg(long)]
    tau: Option<f64>,
    /// Seed recorded in the report; the estimators are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcaArgs {
    #[command(flatten)]
    estimate: EstimateArgs,
    /// Number of principal components (1 <= k <= d).
    #[arg(long)]
    k: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Flat key-value benchmark configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's beta.
    #[arg(long)]
    beta: Option<f64>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    /// Input/validation problem outside the core library (exit 2).
    Input(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => 2,
                Error::SampleSize { .. } | Error::Config(_) => 3,
                Error::DegenerateSpectrum { .. } => 4,
                Error::Numeric(_) | Error::Convergence { .. } => 5,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

impl MatrixJson {
    fn from_sym(m: &SymMat) -> MatrixJson {
        MatrixJson {
            rows: m.dim(),
            cols: m.dim(),
            data: m.to_row_major(),
        }
    }
}

#[derive(Serialize)]
struct GridJson {
    sigmas: Vec<f64>,
    thetas: Vec<f64>,
    j_star: usize,
    sigma_selected: f64,
}

#[derive(Serialize)]
struct PcaJson {
    k: usize,
    eigenvalues: Vec<f64>,
    /// d x k matrix whose columns are the top-k eigenvectors.
    eigenvectors: MatrixJson,
    projector: MatrixJson,
    /// Spectral gap lambda_k - lambda_{k+1}; null when k = d.
    gap: Option<f64>,
    /// 36 sigma_{j*} sqrt(beta/m) / gap with sigma_{j*} in place of the
    /// unknown sigma_0; a plug-in diagnostic, not a certified bound.
    plug_in_radius: Option<f64>,
    plug_in_radius_label: String,
}

#[derive(Serialize)]
struct EstimateReport {
    command: String,
    input: String,
    m: usize,
    d: usize,
    beta: f64,
    seed: u64,
    sigma_min: f64,
    sigma_max: f64,
    /// True when the corresponding bound came from the sample-covariance
    /// heuristic rather than a flag.
    sigma_min_heuristic: bool,
    sigma_max_heuristic: bool,
    mu_hat: Vec<f64>,
    grid: GridJson,
    sigma_hat_star: MatrixJson,
    tau: Option<f64>,
    sigma_hat_star_tau: Option<MatrixJson>,
    tau_eigenvalues: Option<Vec<f64>>,
    pca: Option<PcaJson>,
}

fn write_report<T: Serialize>(path: &PathBuf, report: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Run the shared estimation pipeline and build the report skeleton.
fn estimate_pipeline(args: &EstimateArgs) -> Result<(Samples, LepskiReport, EstimateReport), CliError> {
    let samples = csvio::read_csv(&args.input).map_err(CliError::Input)?;
    let (m, d) = (samples.m(), samples.dim());

    if let Some(tau) = args.tau {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(CliError::Input(format!(
                "--tau must be finite and nonnegative, got {tau}"
            )));
        }
    }

    let scov = sample_cov(&samples);
    let s_op = op_norm(&scov)?;
    if s_op <= 0.0 {
        return Err(CliError::Core(Error::Numeric(
            "sample covariance is zero; cannot derive sigma bounds".into(),
        )));
    }
    let sigma_min = args
        .sigma_min
        .unwrap_or_else(|| (trace(&scov) * s_op).sqrt() / 8.0);
    let sigma_max = args.sigma_max.unwrap_or_else(|| 8.0 * (m as f64).sqrt() * s_op);

    let cfg = LepskiConfig {
        sigma_min,
        sigma_max,
        beta: args.beta,
    };
    let lepski = lepski_estimate(&samples, &cfg)?;

    let (soft, tau_eigs) = match args.tau {
        Some(tau) => {
            let s = soft_threshold(lepski.selected(), tau)?;
            let eigs = sym_eigen(&s)?.values().to_vec();
            (Some(MatrixJson::from_sym(&s)), Some(eigs))
        }
        None => (None, None),
    };

    let report = EstimateReport {
        command: "estimate".into(),
        input: args.input.display().to_string(),
        m,
        d,
        beta: args.beta,
        seed: args.seed,
        sigma_min,
        sigma_max,
        sigma_min_heuristic: args.sigma_min.is_none(),
        sigma_max_heuristic: args.sigma_max.is_none(),
        mu_hat: lepski.mom.mu_hat.iter().copied().collect(),
        grid: GridJson {
            sigmas: lepski.sigmas.clone(),
            thetas: lepski.thetas.clone(),
            j_star: lepski.j_star,
            sigma_selected: lepski.sigmas[lepski.j_star],
        },
        sigma_hat_star: MatrixJson::from_sym(lepski.selected()),
        tau: args.tau,
        sigma_hat_star_tau: soft,
        tau_eigenvalues: tau_eigs,
        pca: None,
    };
    Ok((samples, lepski, report))
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let (_, _, report) = estimate_pipeline(args)?;
    write_report(&args.out, &report)
}

fn cmd_pca(args: &PcaArgs) -> Result<(), CliError> {
    let (samples, lepski, mut report) = estimate_pipeline(&args.estimate)?;
    let d = samples.dim();
    let k = args.k;

    let sigma = lepski.selected();
    let projector = pca_projector(sigma, k)?;
    let eigen = sym_eigen(sigma)?;
    let eigenvalues: Vec<f64> = eigen.values()[..k].to_vec();
    let mut vec_data = Vec::with_capacity(d * k);
    for i in 0..d {
        for j in 0..k {
            vec_data.push(eigen.vectors()[(i, j)]);
        }
    }

    let (gap, plug_in_radius) = if k < d {
        let gap = spectral_gap(sigma, k)?;
        let sigma_sel = lepski.sigmas[lepski.j_star];
        let radius = 36.0 * sigma_sel * (lepski.beta / lepski.m as f64).sqrt() / gap;
        (Some(gap), Some(radius))
    } else {
        // k = d: the projector is the identity and no gap is involved.
        (None, None)
    };

    report.command = "pca".into();
    report.pca = Some(PcaJson {
        k,
        eigenvalues,
        eigenvectors: MatrixJson {
            rows: d,
            cols: k,
            data: vec_data,
        },
        projector: MatrixJson::from_sym(&projector),
        gap,
        plug_in_radius,
        plug_in_radius_label: "plug-in diagnostic".into(),
    });
    write_report(&args.estimate.out, &report)
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = heavycov::simlab::parse_bench_config(&text)?;
    if let Some(beta) = args.beta {
        cfg.beta = beta;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| {
            CliError::Input(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))
        })?;
        if n == 0 {
            return Err(CliError::Input(format!(
                "{THREADS_ENV} must be a positive integer, got `0`"
            )));
        }
        cfg.threads = Some(n);
    }
    let report = heavycov::simlab::run_benchmark(&cfg)?;
    write_report(&args.out, &report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Pca(args) => cmd_pca(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
