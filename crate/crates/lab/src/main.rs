use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use isac_lab::config::{Axis, LabConfig};
use isac_lab::experiment::{evaluate_policy, run_experiment, write_evaluation, CellOutput};
use isac_lab::{selftest, summarize, Checkpoint};

/// Training and experiment driver for the UAV-mounted IRS ISAC simulator.
#[derive(Parser)]
#[command(name = "isac-lab", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON file with overrides of the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run only this seed instead of the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Start from the full-size profile instead of the desk profile.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Worker threads for independent runs (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train on the base scenario for each seed.
    Train,
    /// Train every cell of the configured sweep.
    Sweep,
    /// Evaluate a saved actor greedily.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Evaluation episodes (default: the config's `eval_episodes`).
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Aggregate the metrics CSVs of a result directory.
    Summarize { dir: PathBuf },
    /// Run quick built-in sanity checks.
    Selftest,
}

fn load_config(c: &Common) -> Result<LabConfig> {
    let mut cfg = LabConfig::load(c.config.as_deref(), c.paper_scale)?;
    if let Some(seed) = c.seed {
        cfg.experiment.seeds = vec![seed];
    }
    Ok(cfg)
}

fn threads(c: &Common) -> usize {
    c.threads
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn report(r: &CellOutput) {
    let n = r.episodes.len();
    let last = r.episodes.last();
    let greedy_viol =
        r.evaluation.iter().map(|e| e.totals.violation_rate()).sum::<f64>() / r.evaluation.len().max(1) as f64;
    eprintln!(
        "{} seed {}: {} episodes, final reward {:.4}, greedy violation rate {:.3}",
        r.cell.tag,
        r.cell.seed,
        n,
        last.map_or(f64::NAN, |e| e.reward),
        greedy_viol
    );
}

fn run_cells(cfg: &LabConfig, common: &Common) -> Result<()> {
    let results = run_experiment(cfg, &common.out, threads(common), report)?;
    let files: usize = results.iter().map(|r| r.files.len()).sum();
    println!("wrote {files} CSV files to {}", common.out.display());
    Ok(())
}

fn eval(common: &Common, checkpoint: &Path, episodes: Option<usize>) -> Result<()> {
    let ck = Checkpoint::load(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let policy = ck.policy()?;
    let episodes = match episodes {
        Some(n) => n,
        None => load_config(common)?.eval_episodes,
    };
    let seed = common.seed.unwrap_or(ck.seed);
    let evaluation = evaluate_policy(&ck.scenario, policy.as_ref(), episodes, seed)?;
    std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    let stem = checkpoint.file_stem().and_then(|s| s.to_str()).unwrap_or("checkpoint");
    let [eval_path, traj_path] = write_evaluation(&common.out, &format!("{stem}_greedy"), &evaluation)?;
    let n = evaluation.len().max(1) as f64;
    let reward = evaluation.iter().map(|e| e.totals.mean_reward()).sum::<f64>() / n;
    let viol = evaluation.iter().map(|e| e.totals.violation_rate()).sum::<f64>() / n;
    println!("mean reward {reward:.6}, violation rate {viol:.4}");
    println!("wrote {} and {}", eval_path.display(), traj_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Train => {
            let mut cfg = load_config(common)?;
            cfg.experiment.sweep.axis = Axis::None;
            cfg.experiment.sweep.values.clear();
            run_cells(&cfg, common)
        }
        Command::Sweep => {
            let cfg = load_config(common)?;
            if cfg.experiment.sweep.axis == Axis::None {
                bail!("config has no sweep axis; set experiment.sweep or use `train`");
            }
            run_cells(&cfg, common)
        }
        Command::Eval {
            ref checkpoint,
            episodes,
        } => eval(common, checkpoint, episodes),
        Command::Summarize { ref dir } => {
            let rows = summarize(dir)?;
            println!("tag,runs,reward_mean,reward_std,f1_per_slot_mean,f2_per_slot_mean,f3_per_slot_mean,violation_rate_mean");
            for r in rows {
                println!(
                    "{},{},{},{},{},{},{},{}",
                    r.tag,
                    r.runs,
                    r.reward_mean,
                    r.reward_std,
                    r.f1_per_slot_mean,
                    r.f2_per_slot_mean,
                    r.f3_per_slot_mean,
                    r.violation_rate_mean
                );
            }
            Ok(())
        }
        Command::Selftest => {
            let checks = selftest::run();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
