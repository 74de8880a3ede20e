//! Seeded Monte-Carlo sweeps over the hybrid beamforming pipeline.
//!
//! An [`ExperimentSpec`] is parsed from a flat `key = value` file plus
//! command-line overrides; [`run_sweep`] evaluates every
//! (sweep point, trial, method) triple on a bounded thread pool and
//! [`write_csv`] serializes the records and per-point means.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod plot;
pub mod run;
pub mod spec;

use std::path::PathBuf;

pub use output::{write_csv, write_outputs, write_trace, CSV_VERSION};
pub use plot::emit_plot_script;
pub use run::{
    aggregate, prepare_trial, run_sweep, run_trial, trial_rng, Aggregate, PreparedTrial, SweepResult, TrialMetrics,
    TrialRecord,
};
pub use spec::{parse_spec, ExperimentSpec, Sweep};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error(transparent)]
    Core(#[from] hbf_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {reason}", path.display())]
    Parse { path: PathBuf, line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl SimError {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        SimError::Config { key: key.to_string(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
