//! Training runs and sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use isac_core::agents::{evaluate, train_with_progress, EpisodeRecord, EvalEpisode, Policy};
use isac_core::env::{IsacEnv, Scenario};

use crate::checkpoint::Checkpoint;
use crate::config::{Axis, LabConfig, SweepValue};
use crate::output::{write_rows, EvalRow, MetricsRow, TrajectoryRow};
use crate::LabError;

/// One (sweep value, seed) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub tag: String,
    pub scenario: Scenario,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub cell: Cell,
    pub episodes: Vec<EpisodeRecord>,
    pub evaluation: Vec<EvalEpisode>,
    /// CSV files written, in metrics, eval, trajectory order.
    pub files: Vec<PathBuf>,
    pub checkpoint: PathBuf,
}

fn format_number(v: f64) -> String {
    format!("{v}")
}

/// File-name tag of a sweep value, e.g. `p_max_dbm_30` or `uav_start_0_300`.
pub fn tag_for(axis: Axis, value: Option<SweepValue>) -> String {
    let name = match axis {
        Axis::None => return "run".into(),
        Axis::PMaxDbm => "p_max_dbm",
        Axis::ZR => "z_r",
        Axis::Antennas => "antennas",
        Axis::UavStart => "uav_start",
    };
    match value {
        Some(SweepValue::Number(v)) => format!("{name}_{}", format_number(v)),
        Some(SweepValue::Point(p)) => format!("{name}_{}_{}", format_number(p.x), format_number(p.y)),
        None => name.into(),
    }
}

/// Expands the configured sweep into cells, sweep value major.
pub fn cells(cfg: &LabConfig) -> Result<Vec<Cell>, LabError> {
    let sweep = &cfg.experiment.sweep;
    let points: Vec<(String, Scenario)> = if sweep.axis == Axis::None {
        vec![(tag_for(Axis::None, None), cfg.scenario.clone())]
    } else {
        sweep
            .values
            .iter()
            .map(|v| Ok((tag_for(sweep.axis, Some(*v)), cfg.apply(sweep.axis, *v)?)))
            .collect::<Result<_, LabError>>()?
    };
    let mut out = Vec::new();
    for (tag, scenario) in points {
        for &seed in &cfg.experiment.seeds {
            out.push(Cell {
                tag: tag.clone(),
                scenario: scenario.clone(),
                seed,
            });
        }
    }
    Ok(out)
}

fn stem(cell: &Cell) -> String {
    format!("{}_seed{}", cell.tag, cell.seed)
}

/// Greedy evaluation on an environment instance separate from training.
pub fn evaluate_policy(
    scenario: &Scenario,
    policy: Option<&Policy>,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EvalEpisode>, LabError> {
    let mut env = IsacEnv::for_evaluation(scenario.clone(), seed)?;
    Ok(evaluate(&mut env, policy, episodes, seed)?)
}

/// Writes the evaluation and trajectory CSVs for `stem` into `dir`.
pub fn write_evaluation(dir: &Path, stem: &str, evaluation: &[EvalEpisode]) -> Result<[PathBuf; 2], LabError> {
    let eval_path = dir.join(format!("{stem}_eval.csv"));
    let rows: Vec<EvalRow> = evaluation
        .iter()
        .enumerate()
        .map(|(i, e)| EvalRow::new(i + 1, e))
        .collect();
    write_rows(&eval_path, &rows)?;
    let traj_path = dir.join(format!("{stem}_trajectory.csv"));
    let traj: Vec<TrajectoryRow> = evaluation
        .first()
        .map(|e| {
            e.trajectory
                .iter()
                .enumerate()
                .map(|(i, p)| TrajectoryRow {
                    t: i + 1,
                    x: p.x,
                    y: p.y,
                    z: p.z,
                })
                .collect()
        })
        .unwrap_or_default();
    write_rows(&traj_path, &traj)?;
    Ok([eval_path, traj_path])
}

/// Trains, evaluates and writes the three CSVs plus a checkpoint for one cell.
pub fn run_cell(cfg: &LabConfig, cell: &Cell, out: &Path) -> Result<CellOutput, LabError> {
    run_cell_with_progress(cfg, cell, out, |_| {})
}

pub fn run_cell_with_progress<F>(cfg: &LabConfig, cell: &Cell, out: &Path, progress: F) -> Result<CellOutput, LabError>
where
    F: FnMut(&EpisodeRecord),
{
    let mut env = IsacEnv::new(cell.scenario.clone(), cell.seed)?;
    let report = train_with_progress(&mut env, &cfg.agent, cell.seed, progress)?;
    let evaluation = evaluate_policy(&cell.scenario, report.policy.as_ref(), cfg.eval_episodes, cell.seed)?;

    fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
    let stem = stem(cell);
    let metrics_path = out.join(format!("{stem}_metrics.csv"));
    let rows: Vec<MetricsRow> = report.episodes.iter().map(MetricsRow::from).collect();
    write_rows(&metrics_path, &rows)?;
    let [eval_path, traj_path] = write_evaluation(out, &stem, &evaluation)?;

    let ck_dir = out.join("checkpoints");
    fs::create_dir_all(&ck_dir).map_err(|e| LabError::io(&ck_dir, e))?;
    let checkpoint = ck_dir.join(format!("{stem}.json"));
    Checkpoint::new(&cell.scenario, &cfg.agent, cell.seed, report.policy.as_ref()).save(&checkpoint)?;

    Ok(CellOutput {
        cell: cell.clone(),
        episodes: report.episodes,
        evaluation,
        files: vec![metrics_path, eval_path, traj_path],
        checkpoint,
    })
}

/// Runs every cell of the configured experiment on up to `threads` worker
/// threads. Results come back in cell order; the first error aborts the rest.
pub fn run_experiment<F>(cfg: &LabConfig, out: &Path, threads: usize, on_done: F) -> Result<Vec<CellOutput>, LabError>
where
    F: Fn(&CellOutput) + Sync,
{
    cfg.validate()?;
    let cells = cells(cfg)?;
    let next = AtomicUsize::new(0);
    let failed = Mutex::new(None::<LabError>);
    let results: Mutex<Vec<Option<CellOutput>>> = Mutex::new(vec![None; cells.len()]);
    let workers = threads.clamp(1, cells.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if failed.lock().unwrap().is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { return };
                match run_cell(cfg, cell, out) {
                    Ok(r) => {
                        on_done(&r);
                        results.lock().unwrap()[i] = Some(r);
                    }
                    Err(e) => {
                        failed.lock().unwrap().get_or_insert(e);
                        return;
                    }
                }
            });
        }
    });
    if let Some(e) = failed.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results.into_inner().unwrap().into_iter().flatten().collect())
}
