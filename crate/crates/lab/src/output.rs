//! CSV writers and readers for run outputs.

use std::path::Path;

use isac_core::agents::{EpisodeRecord, EvalEpisode};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    pub reward: f64,
    pub train_reward: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub violation_rate: f64,
    pub slots: usize,
}

impl From<&EpisodeRecord> for MetricsRow {
    fn from(r: &EpisodeRecord) -> Self {
        MetricsRow {
            episode: r.episode,
            reward: r.reward,
            train_reward: r.train_reward,
            f1: r.f1,
            f2: r.f2,
            f3: r.f3,
            violation_rate: r.violation_rate,
            slots: r.slots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub episode: usize,
    pub reward: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub violation_rate: f64,
    pub slots: usize,
}

impl EvalRow {
    pub fn new(episode: usize, e: &EvalEpisode) -> Self {
        let t = &e.totals;
        EvalRow {
            episode,
            reward: t.mean_reward(),
            f1: t.f1,
            f2: t.f2,
            f3: t.f3,
            violation_rate: t.violation_rate(),
            slots: t.slots,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, LabError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    r.deserialize().map(|row| row.map_err(LabError::from)).collect()
}

fn csv_io(path: &Path, e: csv::Error) -> LabError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => LabError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        LabError::Csv(e)
    }
}
