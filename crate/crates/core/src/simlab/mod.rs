//! Synthetic heavy-tailed data generation with known ground truth, Monte
//! Carlo oracles, and the benchmark harness.

pub mod bench;
pub mod config;
pub mod mc;
pub mod model;
pub mod rng;

pub use bench::{run_benchmark, BenchConfig, BenchReport, TauRule, TrialRecord};
pub use config::parse_bench_config;
pub use mc::{
    directional_fourth_moment_mc, kurtosis_bound_mc, matrix_variance_mc, GroundTruth, McEstimate,
};
pub use model::Model;
pub use rng::{mix_seed, stream};
