//! Batch experiments for outage-constrained power loading.
//!
//! A sweep draws one channel realisation per trial and solves it with every
//! selected method at every SINR target, so methods are compared on paired
//! trials. Records go to CSV; [`aggregate::aggregate`] reduces them to success
//! rates, common-subset average powers and workload medians.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod config;
pub mod export;
pub mod sweep;

use std::path::PathBuf;

pub use aggregate::{aggregate, SummaryRow};
pub use config::{ExperimentConfig, Method, Training};
pub use sweep::{run_sweep, SweepOptions, TrialRecord};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("no records to aggregate")]
    EmptyRecords,
    #[error("no trial succeeded for every method at sigma_e2 = {sigma_e2}")]
    EmptyIntersection { sigma_e2: f64 },
}
