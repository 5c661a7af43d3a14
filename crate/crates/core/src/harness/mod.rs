//! Single experiments, ablation sweeps and report tables.
//!
//! A run goes load → optional limited re-split → graph → normalisation →
//! features → training → prediction on the test documents → metrics. Every
//! failure is tagged with the stage it happened in; inside a sweep it only
//! takes down the cell it belongs to.

mod config;
mod experiment;
mod report;
mod sweep;

pub use config::{ConfigFile, Environment, ExperimentConfig, NodeFeature};
pub use experiment::{prepare, run_experiment, CellFailure, Prepared, RunRecord, StageError};
pub use report::{emit_report, Axis, EvalReport, ReportFormat, SweepStatus};
pub use sweep::{run_sweep, SweepSpec};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("report has no records")]
    EmptyReport,
    #[error(transparent)]
    Stage(#[from] StageError),
}
