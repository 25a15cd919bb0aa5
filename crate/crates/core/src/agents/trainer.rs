use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{
    ablation_reward, actor_due, critic_input, critic_loss, smoothed_target_action, td_targets, twin_min, AgentConfig,
    AgentKind, Policy,
};
use crate::diffusion::{perturb, vp_schedule, Denoiser, DiffusionActor};
use crate::env::{Environment, EpisodeTotals};
use crate::geometry::Position;
use crate::nn::{adam_update, clip_grad_norm, soft_update, Activation, AdamConfig, AdamState, Mlp, MlpSpec};
use crate::random::{rng_for, stream, Rng};
use crate::replay::{ere_range, ReplayBuffer, Transition};
use crate::{Error, Result};

/// Per-episode training log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeRecord {
    /// 1-based.
    pub episode: usize,
    /// Mean per-slot environment reward.
    pub reward: f64,
    /// Mean per-slot reward the learner was trained on (differs under ablations).
    pub train_reward: f64,
    /// Episode sum rate, sensing rate and energy totals.
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub violation_rate: f64,
    pub slots: usize,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeRecord>,
    pub transitions: usize,
    /// Critic update rounds.
    pub updates: usize,
    pub actor_updates: usize,
    /// Final actor; `None` for the random policy.
    pub policy: Option<Policy>,
}

/// One greedy evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode {
    pub totals: EpisodeTotals,
    /// UAV position after each slot.
    pub trajectory: Vec<Position>,
}

/// Fresh actor for `kind`; `None` for the random policy.
pub fn init_policy(cfg: &AgentConfig, state_dim: usize, action_dim: usize, rng: &mut Rng) -> Result<Option<Policy>> {
    Ok(match cfg.kind {
        AgentKind::Random => None,
        AgentKind::Gdmddpg => {
            let d = &cfg.diffusion;
            let denoiser = Denoiser::init(action_dim, state_dim, d.embed_dim, &cfg.actor_hidden, rng)?;
            Some(Policy::Diffusion(DiffusionActor {
                denoiser,
                schedule: vp_schedule(d.steps, d.c1, d.c2)?,
                noise_mode: d.reverse_noise,
            }))
        }
        AgentKind::Ddpg | AgentKind::Td3 => {
            let spec = MlpSpec::new(
                state_dim,
                &cfg.actor_hidden,
                action_dim,
                Activation::Relu,
                Activation::Tanh,
            );
            Some(Policy::Mlp(Mlp::init(spec, rng, false)?))
        }
    })
}

fn random_action(dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

struct Learner {
    cfg: AgentConfig,
    actor: Policy,
    actor_target: Policy,
    actor_adam: AdamState,
    critics: Vec<Mlp>,
    critic_targets: Vec<Mlp>,
    critic_adam: Vec<AdamState>,
    buffer: ReplayBuffer,
    actor_grads: Vec<f64>,
    critic_grads: Vec<f64>,
    updates: usize,
    actor_updates: usize,
}

impl Learner {
    fn new(cfg: &AgentConfig, actor: Policy, state_dim: usize, action_dim: usize, rng: &mut Rng) -> Result<Self> {
        let twins = if cfg.kind == AgentKind::Td3 { 2 } else { 1 };
        let spec = MlpSpec::new(
            state_dim + action_dim,
            &cfg.critic_hidden,
            1,
            Activation::Relu,
            Activation::Identity,
        );
        let critics = (0..twins)
            .map(|_| Mlp::init(spec.clone(), rng, false))
            .collect::<Result<Vec<_>>>()?;
        let n_actor = actor.params().len();
        let n_critic = spec.param_count();
        Ok(Learner {
            cfg: cfg.clone(),
            actor_target: actor.clone(),
            actor,
            actor_adam: AdamState::new(n_actor),
            critic_targets: critics.clone(),
            critic_adam: vec![AdamState::new(n_critic); twins],
            critics,
            buffer: ReplayBuffer::new(cfg.replay.clone())?,
            actor_grads: vec![0.0; n_actor],
            critic_grads: vec![0.0; n_critic],
            updates: 0,
            actor_updates: 0,
        })
    }

    fn update(&mut self, u: usize, phase: usize, rngs: &mut (Rng, Rng), episode: usize, step: usize) -> Result<()> {
        let (actor_rng, replay_rng) = rngs;
        let b = self.cfg.batch;
        let sample = if self.cfg.prioritized {
            let window = ere_range(u, phase, &self.cfg.replay, self.buffer.len());
            self.buffer.sample_batch(b, window, replay_rng)?
        } else {
            self.buffer.sample_uniform(b, replay_rng)?
        };
        let batch = self.buffer.gather(&sample.indices);
        let non_finite = |what| Error::NonFinite { what, episode, step };

        // targets
        let mut next_actions = self.actor_target.act(&batch.next_states, b, actor_rng)?;
        if self.cfg.kind == AgentKind::Td3 {
            next_actions = smoothed_target_action(&next_actions, &self.cfg.td3, actor_rng);
        }
        let next_in = critic_input(&batch.next_states, &next_actions, b);
        let mut q_next = self.critic_targets[0].forward(&next_in, b)?;
        for target in &self.critic_targets[1..] {
            q_next = twin_min(&q_next, &target.forward(&next_in, b)?);
        }
        let y = td_targets(&batch.rewards, &batch.dones, &q_next, self.cfg.gamma);

        // critics
        let input = critic_input(&batch.states, &batch.actions, b);
        let critic_cfg = AdamConfig::with_lr(self.cfg.lr_critic);
        let mut td_first = Vec::new();
        for (k, critic) in self.critics.iter_mut().enumerate() {
            let tape = critic.forward_tape(&input, b)?;
            let (loss, td, dq) = critic_loss(tape.output(), &y, &sample.weights);
            if !loss.is_finite() {
                return Err(non_finite("critic loss"));
            }
            self.critic_grads.iter_mut().for_each(|g| *g = 0.0);
            critic.backward(&tape, &dq, Some(&mut self.critic_grads))?;
            clip_grad_norm(&mut self.critic_grads, self.cfg.grad_clip);
            adam_update(
                &mut critic.params.values,
                &self.critic_grads,
                &mut self.critic_adam[k],
                &critic_cfg,
            );
            if k == 0 {
                td_first = td;
            }
        }
        if self.cfg.prioritized {
            self.buffer.update_priorities(&sample.indices, &td_first)?;
        }
        self.updates += 1;

        let move_actor = self.cfg.kind != AgentKind::Td3 || actor_due(self.updates, self.cfg.td3.policy_delay);
        if move_actor {
            let (actions, trace) = self.actor.act_traced(&batch.states, b, actor_rng)?;
            let critic = &self.critics[0];
            let tape = critic.forward_tape(&critic_input(&batch.states, &actions, b), b)?;
            let loss = super::actor_loss(tape.output());
            if !loss.is_finite() {
                return Err(non_finite("actor loss"));
            }
            let dq = vec![-1.0 / b as f64; b];
            let grad_in = critic.backward(&tape, &dq, None)?;
            let ad = self.actor.action_dim();
            let width = critic.spec.input();
            let sd = width - ad;
            let mut grad_a = Vec::with_capacity(b * ad);
            for row in grad_in.chunks(width) {
                grad_a.extend_from_slice(&row[sd..]);
            }
            self.actor_grads.iter_mut().for_each(|g| *g = 0.0);
            self.actor.backward(&trace, &grad_a, &mut self.actor_grads)?;
            if !self.actor_grads.iter().all(|g| g.is_finite()) {
                return Err(non_finite("actor gradient"));
            }
            clip_grad_norm(&mut self.actor_grads, self.cfg.grad_clip);
            let actor_cfg = AdamConfig::with_lr(self.cfg.lr_actor);
            adam_update(
                self.actor.params_mut(),
                &self.actor_grads,
                &mut self.actor_adam,
                &actor_cfg,
            );
            self.actor_updates += 1;

            let tau = self.cfg.tau;
            soft_update(self.actor_target.params_mut(), self.actor.params(), tau);
            for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
                soft_update(&mut t.params.values, &c.params.values, tau);
            }
        }
        Ok(())
    }
}

/// Trains `cfg.kind` on `env` for `cfg.episodes` episodes. Fully determined by
/// `seed` and the environment's own seed.
pub fn train<E: Environment>(env: &mut E, cfg: &AgentConfig, seed: u64) -> Result<TrainReport> {
    train_with_progress(env, cfg, seed, |_| {})
}

/// As [`train`], calling `progress` after every episode.
pub fn train_with_progress<E, F>(env: &mut E, cfg: &AgentConfig, seed: u64, mut progress: F) -> Result<TrainReport>
where
    E: Environment,
    F: FnMut(&EpisodeRecord),
{
    cfg.validate()?;
    let (sd, ad, slots) = (env.state_dim(), env.action_dim(), env.slots());
    let mut init_rng = rng_for(seed, stream::INIT);
    let mut explore_rng = rng_for(seed, stream::EXPLORE);
    let mut rngs = (rng_for(seed, stream::ACTOR), rng_for(seed, stream::REPLAY));

    let mut learner = match init_policy(cfg, sd, ad, &mut init_rng)? {
        Some(actor) => Some(Learner::new(cfg, actor, sd, ad, &mut init_rng)?),
        None => None,
    };
    let beta2_start = cfg.replay.beta2;
    let mut episodes = Vec::with_capacity(cfg.episodes);
    let mut transitions = 0;

    for ep in 0..cfg.episodes {
        let sigma = cfg.exploration.sigma(ep, cfg.episodes);
        if let Some(l) = learner.as_mut() {
            let frac = if cfg.episodes > 1 {
                ep as f64 / (cfg.episodes - 1) as f64
            } else {
                1.0
            };
            l.buffer.set_beta2(beta2_start + (cfg.beta2_end - beta2_start) * frac);
        }
        let mut state = env.reset();
        let mut totals = EpisodeTotals::default();
        let mut train_reward = 0.0;
        for t in 1..=slots {
            let action = match learner.as_ref() {
                Some(l) => {
                    let a = l.actor.act(&state, 1, &mut rngs.0)?;
                    perturb(&a, sigma, cfg.exploration.bound, &mut explore_rng)
                }
                None => random_action(ad, &mut explore_rng),
            };
            let step = env.step(&action)?;
            totals.add(step.reward, &step.metrics);
            let r = ablation_reward(cfg.ablation, step.reward, &step.metrics, cfg.ablation_scale);
            train_reward += r;
            if let Some(l) = learner.as_mut() {
                l.buffer.push(Transition {
                    state: core::mem::take(&mut state),
                    action,
                    reward: r,
                    next_state: step.next_state.clone(),
                    done: step.done,
                });
                transitions += 1;
                if l.buffer.len() >= cfg.batch {
                    l.update(t, slots, &mut rngs, ep + 1, t)?;
                }
            }
            state = step.next_state;
            if step.done {
                break;
            }
        }
        let n = totals.slots.max(1) as f64;
        let record = EpisodeRecord {
            episode: ep + 1,
            reward: totals.mean_reward(),
            train_reward: train_reward / n,
            f1: totals.f1,
            f2: totals.f2,
            f3: totals.f3,
            violation_rate: totals.violation_rate(),
            slots: totals.slots,
        };
        if !record.reward.is_finite() {
            return Err(Error::NonFinite {
                what: "episode reward",
                episode: ep + 1,
                step: totals.slots,
            });
        }
        progress(&record);
        episodes.push(record);
    }

    let (updates, actor_updates, policy) = match learner {
        Some(l) => (l.updates, l.actor_updates, Some(l.actor)),
        None => (0, 0, None),
    };
    Ok(TrainReport {
        episodes,
        transitions,
        updates,
        actor_updates,
        policy,
    })
}

/// How an evaluation run draws actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EvalMode {
    /// Deterministic policy output (zero diffusion-chain noise).
    #[default]
    Greedy,
    /// Fresh chain noise per decision, as during training but unperturbed.
    Sampled,
}

/// Plays `episodes` episodes without exploration noise. With no policy the
/// actions are uniform in `[−1, 1]`.
pub fn evaluate<E: Environment>(
    env: &mut E,
    policy: Option<&Policy>,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EvalEpisode>> {
    evaluate_with(env, policy, episodes, seed, EvalMode::Greedy)
}

pub fn evaluate_with<E: Environment>(
    env: &mut E,
    policy: Option<&Policy>,
    episodes: usize,
    seed: u64,
    mode: EvalMode,
) -> Result<Vec<EvalEpisode>> {
    let mut rng = rng_for(seed, stream::EVAL);
    let ad = env.action_dim();
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset();
        let mut totals = EpisodeTotals::default();
        let mut trajectory = Vec::with_capacity(env.slots());
        loop {
            let action = match policy {
                Some(p) if mode == EvalMode::Greedy => p.act_greedy(&state, 1)?,
                Some(p) => p.act(&state, 1, &mut rng)?,
                None => random_action(ad, &mut rng),
            };
            let step = env.step(&action)?;
            totals.add(step.reward, &step.metrics);
            trajectory.push(step.metrics.position);
            state = step.next_state;
            if step.done {
                break;
            }
        }
        out.push(EvalEpisode { totals, trajectory });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{SlotMetrics, Step};

    /// Three-slot toy task: reward is the first action component.
    struct Stub {
        t: usize,
        slots: usize,
    }

    impl Environment for Stub {
        fn state_dim(&self) -> usize {
            2
        }
        fn action_dim(&self) -> usize {
            2
        }
        fn slots(&self) -> usize {
            self.slots
        }
        fn reset(&mut self) -> Vec<f64> {
            self.t = 0;
            vec![0.0, 1.0]
        }
        fn step(&mut self, a: &[f64]) -> Result<Step> {
            self.t += 1;
            Ok(Step {
                next_state: vec![self.t as f64 / self.slots as f64, 1.0],
                reward: a[0],
                done: self.t == self.slots,
                metrics: SlotMetrics {
                    t: self.t,
                    r_u: 1.0,
                    r_st: 1.0,
                    e_u: 1.0,
                    violated: false,
                    penalty: 0.0,
                    position: Position::new(self.t as f64, 0.0, 0.0),
                },
            })
        }
    }

    fn tiny(kind: AgentKind) -> AgentConfig {
        let mut cfg = AgentConfig::desk(kind);
        cfg.episodes = 1;
        cfg.batch = 1;
        cfg.actor_hidden = vec![8];
        cfg.critic_hidden = vec![8];
        cfg.diffusion.embed_dim = 4;
        cfg.replay.capacity = 100;
        cfg.replay.f_min = 10;
        cfg
    }

    #[test]
    fn loop_accounting() {
        for kind in [AgentKind::Gdmddpg, AgentKind::Ddpg, AgentKind::Td3] {
            let mut env = Stub { t: 0, slots: 3 };
            let r = train(&mut env, &tiny(kind), 1).unwrap();
            assert_eq!(r.transitions, 3);
            assert_eq!(r.updates, 3);
            assert_eq!(r.episodes.len(), 1);
        }
        let mut env = Stub { t: 0, slots: 3 };
        let r = train(&mut env, &tiny(AgentKind::Td3), 1).unwrap();
        assert_eq!(r.actor_updates, 1);
    }

    #[test]
    fn random_policy_never_updates() {
        let mut env = Stub { t: 0, slots: 3 };
        let mut cfg = tiny(AgentKind::Random);
        cfg.episodes = 4;
        let r = train(&mut env, &cfg, 1).unwrap();
        assert_eq!((r.transitions, r.updates), (0, 0));
        assert!(r.policy.is_none());
        assert_eq!(r.episodes.len(), 4);
        assert!(r.episodes.iter().all(|e| e.slots == 3 && e.reward.abs() <= 1.0));
    }

    #[test]
    fn zero_learning_rates_freeze_parameters() {
        for kind in [AgentKind::Gdmddpg, AgentKind::Ddpg, AgentKind::Td3] {
            let mut cfg = tiny(kind);
            cfg.lr_actor = 0.0;
            cfg.lr_critic = 0.0;
            cfg.episodes = 3;
            let initial = init_policy(&cfg, 2, 2, &mut rng_for(9, stream::INIT)).unwrap().unwrap();
            let mut env = Stub { t: 0, slots: 5 };
            let r = train(&mut env, &cfg, 9).unwrap();
            assert!(r.updates > 0);
            let fin = r.policy.unwrap();
            let same = initial
                .params()
                .iter()
                .zip(fin.params())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "{kind:?}");
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let mut cfg = tiny(AgentKind::Gdmddpg);
        cfg.episodes = 3;
        let run = |seed| {
            let mut env = Stub { t: 0, slots: 4 };
            train(&mut env, &cfg, seed).unwrap().episodes
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn learns_toy_task() {
        // reward equals the first action component, so the actor should push it up
        for kind in [AgentKind::Ddpg, AgentKind::Gdmddpg] {
            let mut cfg = tiny(kind);
            cfg.episodes = 150;
            cfg.batch = 16;
            cfg.lr_actor = 3e-3;
            cfg.lr_critic = 3e-3;
            cfg.gamma = 0.5;
            cfg.actor_hidden = vec![16];
            cfg.critic_hidden = vec![16];
            let mut env = Stub { t: 0, slots: 4 };
            let r = train(&mut env, &cfg, 3).unwrap();
            let evals = evaluate(&mut env, r.policy.as_ref(), 5, 3).unwrap();
            let mean = evals.iter().map(|e| e.totals.mean_reward()).sum::<f64>() / 5.0;
            assert!(mean > 0.5, "{kind:?}: {mean}");
        }
    }

    #[test]
    fn evaluation_records_trajectory() {
        let mut env = Stub { t: 0, slots: 3 };
        let ev = evaluate(&mut env, None, 2, 1).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].trajectory.len(), 3);
        assert_eq!(ev[0].trajectory[2].x, 3.0);
    }
}
