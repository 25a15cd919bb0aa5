//! Fast sanity checks of an installed build.

use isac_core::agents::{AgentConfig, AgentKind};
use isac_core::diffusion::vp_schedule;
use isac_core::env::{IsacEnv, Scenario};
use isac_core::nn::soft_update;
use isac_core::random::{rng_for, stream};
use isac_core::replay::{ReplayBuffer, RperConfig, Transition};
use isac_core::uav::{propulsion_energy, EnergyParams};

use crate::checkpoint::Checkpoint;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run() -> Vec<Check> {
    let mut out = Vec::new();

    let hover = propulsion_energy(0.0, &EnergyParams::default());
    out.push(match hover {
        Ok(e) => check("hover energy", rel(e, 168.48) < 1e-9, format!("{e:.6} J")),
        Err(e) => check("hover energy", false, e.to_string()),
    });

    out.push(match vp_schedule(5, 0.1, 10.0) {
        Ok(s) => {
            let (b1, b5) = (s.beta(1), s.beta(5));
            let ok = (b1 - 0.1959).abs() < 1e-4 && (b5 - 0.8350).abs() < 1e-4;
            check("vp schedule", ok, format!("beta_1 {b1:.4}, beta_5 {b5:.4}"))
        }
        Err(e) => check("vp schedule", false, e.to_string()),
    });

    let mut t = vec![0.0, 1.0];
    soft_update(&mut t, &[1.0, 1.0], 0.005);
    out.push(check("soft update", t == [0.005, 1.0], format!("{t:?}")));

    out.push(replay_check());
    out.push(episode_check());
    out.push(checkpoint_check());
    out
}

fn replay_check() -> Check {
    let cfg = RperConfig {
        capacity: 8,
        f_min: 2,
        ..RperConfig::default()
    };
    let mut buf = match ReplayBuffer::new(cfg) {
        Ok(b) => b,
        Err(e) => return check("replay buffer", false, e.to_string()),
    };
    for i in 0..20 {
        buf.push(Transition {
            state: vec![i as f64],
            action: vec![0.0],
            reward: 0.0,
            next_state: vec![0.0],
            done: false,
        });
    }
    let mut rng = rng_for(0, stream::REPLAY);
    match buf.sample_batch(4, buf.len(), &mut rng) {
        Ok(s) => check(
            "replay buffer",
            buf.len() == 8 && s.indices.len() == 4,
            format!("{} stored, batch {}", buf.len(), s.indices.len()),
        ),
        Err(e) => check("replay buffer", false, e.to_string()),
    }
}

fn episode_check() -> Check {
    let sc = Scenario::desk();
    let mut env = match IsacEnv::new(sc.clone(), 1) {
        Ok(e) => e,
        Err(e) => return check("random episode", false, e.to_string()),
    };
    match isac_core::agents::evaluate(&mut env, None, 1, 1) {
        Ok(ev) => {
            let tot = &ev[0].totals;
            let ok = tot.slots == sc.slots && tot.reward.is_finite() && tot.f3 > 0.0;
            check(
                "random episode",
                ok,
                format!("{} slots, mean reward {:.4}", tot.slots, tot.mean_reward()),
            )
        }
        Err(e) => check("random episode", false, e.to_string()),
    }
}

fn checkpoint_check() -> Check {
    let sc = Scenario::desk();
    let agent = AgentConfig::desk(AgentKind::Gdmddpg);
    let mut rng = rng_for(4, stream::INIT);
    let policy = match isac_core::agents::init_policy(&agent, sc.state_dim(), sc.action_dim(), &mut rng) {
        Ok(Some(p)) => p,
        Ok(None) => return check("checkpoint roundtrip", false, "no policy".into()),
        Err(e) => return check("checkpoint roundtrip", false, e.to_string()),
    };
    let ck = Checkpoint::new(&sc, &agent, 4, Some(&policy));
    let back = serde_json::to_string(&ck)
        .map_err(crate::LabError::from)
        .and_then(|s| serde_json::from_str::<Checkpoint>(&s).map_err(crate::LabError::from))
        .and_then(|c| c.policy());
    match back {
        Ok(Some(p)) => check(
            "checkpoint roundtrip",
            p == policy,
            format!("{} parameters", p.params().len()),
        ),
        Ok(None) => check("checkpoint roundtrip", false, "policy lost".into()),
        Err(e) => check("checkpoint roundtrip", false, e.to_string()),
    }
}
