//! Experiment harness around `isac-core`: JSON configuration, training and
//! evaluation runs, sweeps, CSV output, checkpoints and result summaries.
//!
//! Output files of one run, named `{tag}_seed{seed}_{kind}.csv` where `tag` is
//! `run` or `{axis}_{value}` for a sweep cell:
//!
//! | kind | columns |
//! |---|---|
//! | `metrics` | `episode,reward,train_reward,f1,f2,f3,violation_rate,slots` |
//! | `eval` | `episode,reward,f1,f2,f3,violation_rate,slots` |
//! | `trajectory` | `t,x,y,z` (first evaluation episode) |
//!
//! `reward` is the mean per-slot reward; `f1`, `f2`, `f3` are episode totals of
//! sum rate, sensing rate and propulsion energy. The final actor is stored as
//! `checkpoints/{tag}_seed{seed}.json`.

use std::path::{Path, PathBuf};

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod output;
pub mod selftest;
pub mod summary;

pub use checkpoint::Checkpoint;
pub use config::{Axis, ExperimentSpec, LabConfig, Sweep, SweepValue};
pub use experiment::{run_cell, run_experiment, Cell, CellOutput};
pub use summary::{summarize, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] isac_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("no results in {0}")]
    NoResults(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("malformed result file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
