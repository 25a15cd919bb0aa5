use std::fs;
use std::path::Path;
use std::process::Command;

use isac_lab::config::{Axis, SweepValue};
use isac_lab::experiment::{cells, run_cell};
use isac_lab::{run_experiment, summarize, Checkpoint, LabConfig, LabError};
use serde_json::json;

fn tiny() -> LabConfig {
    LabConfig::with_overrides(
        false,
        &json!({
            "agent": {"episodes": 2, "batch": 4, "actor_hidden": [4], "critic_hidden": [4],
                      "diffusion": {"embed_dim": 2}, "replay": {"capacity": 50, "f_min": 5}},
            "scenario": {"slots": 4},
            "eval_episodes": 2,
            "experiment": {"seeds": [1]}
        }),
    )
    .unwrap()
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn single_run_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&tiny(), dir.path(), 1, |_| {}).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(
        csv_files(dir.path()),
        [
            "run_seed1_eval.csv",
            "run_seed1_metrics.csv",
            "run_seed1_trajectory.csv"
        ]
    );
    let traj = fs::read_to_string(dir.path().join("run_seed1_trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("t,x,y,z"));
    assert_eq!(traj.lines().count(), 1 + 4);
    let eval = fs::read_to_string(dir.path().join("run_seed1_eval.csv")).unwrap();
    assert_eq!(
        eval.lines().next(),
        Some("episode,reward,f1,f2,f3,violation_rate,slots")
    );
    assert_eq!(eval.lines().count(), 1 + 2);
}

#[test]
fn power_sweep_writes_eighteen_files() {
    let mut cfg = tiny();
    cfg.experiment.sweep.axis = Axis::PMaxDbm;
    cfg.experiment.sweep.values = [20.0, 30.0, 40.0].map(SweepValue::Number).to_vec();
    cfg.experiment.seeds = vec![1, 2];
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path(), 2, |_| {}).unwrap();
    let files = csv_files(dir.path());
    assert_eq!(files.len(), 18);
    assert!(files.contains(&"p_max_dbm_40_seed2_metrics.csv".to_string()));
    let rows = summarize(dir.path()).unwrap();
    let tags: Vec<_> = rows.iter().map(|r| (r.tag.as_str(), r.runs)).collect();
    assert_eq!(tags, [("p_max_dbm_20", 2), ("p_max_dbm_30", 2), ("p_max_dbm_40", 2)]);
}

#[test]
fn rerun_is_byte_identical() {
    let mut cfg = tiny();
    cfg.experiment.seeds = vec![3];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path(), 1, |_| {}).unwrap();
    run_experiment(&cfg, b.path(), 1, |_| {}).unwrap();
    for name in csv_files(a.path()) {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn summary_matches_hand_arithmetic() {
    let dir = tempfile::tempdir().unwrap();
    let header = "episode,reward,train_reward,f1,f2,f3,violation_rate,slots\n";
    // ten episodes each, so the tail is the last episode alone
    let write = |seed: u64, last: &str| {
        let mut text = header.to_string();
        for e in 1..=9 {
            text.push_str(&format!("{e},-100,-100,0,0,0,1,2\n"));
        }
        text.push_str(last);
        fs::write(dir.path().join(format!("run_seed{seed}_metrics.csv")), text).unwrap();
    };
    write(1, "10,1.0,1.0,4.0,0.2,300,0.0,2\n");
    write(2, "10,3.0,3.0,8.0,0.6,340,0.5,2\n");
    let rows = summarize(dir.path()).unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r.runs, 2);
    // per-slot values: f1 2 and 4, f2 0.1 and 0.3, f3 150 and 170
    assert_eq!(r.reward_mean, 2.0);
    assert!((r.reward_std - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.f1_per_slot_mean, 3.0);
    assert!((r.f1_per_slot_std - 2f64.sqrt()).abs() < 1e-12);
    assert!((r.f2_per_slot_mean - 0.2).abs() < 1e-12);
    assert!((r.f2_per_slot_std - 0.02f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.f3_per_slot_mean, 160.0);
    assert!((r.f3_per_slot_std - 200f64.sqrt()).abs() < 1e-9);
    assert_eq!(r.violation_rate_mean, 0.25);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("tag,seed,episode,metric,value"));
    assert_eq!(curves.lines().count(), 1 + 2 * 10 * 5);
}

#[test]
fn single_run_gives_one_row_and_empty_dir_errors() {
    let dir = tempfile::tempdir().unwrap();
    let err = summarize(dir.path()).unwrap_err();
    assert!(matches!(err, LabError::NoResults(_)));
    assert!(err.to_string().contains("no results"));
    run_experiment(&tiny(), dir.path(), 1, |_| {}).unwrap();
    assert_eq!(summarize(dir.path()).unwrap().len(), 1);
}

#[test]
fn checkpoint_restores_trained_actor() {
    let cfg = tiny();
    let dir = tempfile::tempdir().unwrap();
    let cell = &cells(&cfg).unwrap()[0];
    let out = run_cell(&cfg, cell, dir.path()).unwrap();
    let ck = Checkpoint::load(&out.checkpoint).unwrap();
    let policy = ck.policy().unwrap().unwrap();
    let again = isac_lab::experiment::evaluate_policy(&ck.scenario, Some(&policy), 2, cell.seed).unwrap();
    assert_eq!(again, out.evaluation);

    let mut broken = ck.clone();
    broken.params.pop();
    assert!(matches!(broken.policy(), Err(LabError::Checkpoint(_))));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_isac-lab"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"agent": {"gamma": 1.5}}"#).unwrap();
    let out = cli(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));

    fs::write(&cfg, r#"{"agent": {"gamma": 0.9}, "bogus": 1}"#).unwrap();
    let out = cli(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());

    let out = cli(&["sweep", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success(), "sweep without an axis must fail");

    let out = cli(&["summarize", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no results"));
}

#[test]
fn cli_train_eval_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(
        &cfg,
        r#"{"agent": {"kind": "ddpg", "episodes": 2, "batch": 4, "actor_hidden": [4], "critic_hidden": [4]},
            "scenario": {"slots": 3}, "eval_episodes": 1}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();
    let res = cli(&["train", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", o]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let ck = out_dir.join("checkpoints").join("run_seed4.json");
    let res = cli(&[
        "eval",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--episodes",
        "2",
        "--out",
        o,
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out_dir.join("run_seed4_greedy_eval.csv").exists());
    let res = cli(&["summarize", o]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).lines().count() == 2);
}

#[test]
fn cli_selftest_passes() {
    let out = cli(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
