//! Aggregates a result directory into `summary.csv` (one row per config tag)
//! and `curves.csv` (long format: `tag,seed,episode,metric,value`).
//!
//! Each run contributes the mean over its final 10% of episodes (at least
//! one); rows report the mean and sample standard deviation of those values
//! across seeds (std is 0 for a single seed).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::output::{read_rows, write_rows, MetricsRow};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub tag: String,
    pub runs: usize,
    pub reward_mean: f64,
    pub reward_std: f64,
    pub f1_per_slot_mean: f64,
    pub f1_per_slot_std: f64,
    pub f2_per_slot_mean: f64,
    pub f2_per_slot_std: f64,
    pub f3_per_slot_mean: f64,
    pub f3_per_slot_std: f64,
    pub violation_rate_mean: f64,
    pub violation_rate_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CurveRow<'a> {
    tag: &'a str,
    seed: u64,
    episode: usize,
    metric: &'static str,
    value: f64,
}

const METRICS: [&str; 5] = ["reward", "f1_per_slot", "f2_per_slot", "f3_per_slot", "violation_rate"];

fn per_episode(r: &MetricsRow) -> [f64; 5] {
    let t = r.slots.max(1) as f64;
    [r.reward, r.f1 / t, r.f2 / t, r.f3 / t, r.violation_rate]
}

/// Mean of each metric over the final 10% of `rows` (at least one row).
pub fn tail_means(rows: &[MetricsRow]) -> [f64; 5] {
    let n = rows.len().div_ceil(10).max(1).min(rows.len());
    let tail = &rows[rows.len() - n..];
    let mut acc = [0.0; 5];
    for r in tail {
        for (a, v) in acc.iter_mut().zip(per_episode(r)) {
            *a += v;
        }
    }
    acc.map(|a| a / n as f64)
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Splits `{tag}_seed{seed}_metrics.csv` into its tag and seed.
fn parse_name(name: &str) -> Option<(String, u64)> {
    let stem = name.strip_suffix("_metrics.csv")?;
    let (tag, seed) = stem.rsplit_once("_seed")?;
    Some((tag.to_string(), seed.parse().ok()?))
}

type Runs = BTreeMap<String, BTreeMap<u64, Vec<MetricsRow>>>;

fn collect(dir: &Path) -> Result<Runs, LabError> {
    let mut runs: Runs = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| LabError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| LabError::io(dir, e))?;
        let name = entry.file_name();
        let Some((tag, seed)) = name.to_str().and_then(parse_name) else {
            continue;
        };
        let path = entry.path();
        let rows: Vec<MetricsRow> = read_rows(&path)?;
        if rows.is_empty() {
            return Err(LabError::Malformed {
                path,
                reason: "no episodes".into(),
            });
        }
        runs.entry(tag).or_default().insert(seed, rows);
    }
    if runs.is_empty() {
        return Err(LabError::NoResults(dir.to_path_buf()));
    }
    Ok(runs)
}

/// Summarizes every `*_metrics.csv` in `dir`, writes `summary.csv` and
/// `curves.csv` there and returns the summary rows.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>, LabError> {
    let runs = collect(dir)?;
    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for (tag, seeds) in &runs {
        let tails: Vec<[f64; 5]> = seeds.values().map(|rows| tail_means(rows)).collect();
        let stat = |k: usize| mean_std(&tails.iter().map(|t| t[k]).collect::<Vec<_>>());
        let [(r, rs), (f1, f1s), (f2, f2s), (f3, f3s), (v, vs)] = [stat(0), stat(1), stat(2), stat(3), stat(4)];
        summary.push(SummaryRow {
            tag: tag.clone(),
            runs: tails.len(),
            reward_mean: r,
            reward_std: rs,
            f1_per_slot_mean: f1,
            f1_per_slot_std: f1s,
            f2_per_slot_mean: f2,
            f2_per_slot_std: f2s,
            f3_per_slot_mean: f3,
            f3_per_slot_std: f3s,
            violation_rate_mean: v,
            violation_rate_std: vs,
        });
        for (&seed, rows) in seeds {
            for row in rows {
                for (metric, value) in METRICS.iter().zip(per_episode(row)) {
                    curves.push(CurveRow {
                        tag,
                        seed,
                        episode: row.episode,
                        metric,
                        value,
                    });
                }
            }
        }
    }
    write_rows(&dir.join("summary.csv"), &summary)?;
    write_rows(&dir.join("curves.csv"), &curves)?;
    Ok(summary)
}
