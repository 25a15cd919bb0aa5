//! Actor-critic trainers: the diffusion-actor DDPG, plain DDPG, TD3 and a
//! uniform random policy, plus the single-objective reward ablations.
//!
//! All learners share one update path; the kind only switches the actor
//! network, the number of critics, the sampling scheme and the update cadence.

mod policy;
mod trainer;

use alloc::vec;
use alloc::vec::Vec;

pub use policy::{Policy, PolicyTrace};
pub use trainer::{
    evaluate, evaluate_with, init_policy, train, train_with_progress, EpisodeRecord, EvalEpisode, EvalMode, TrainReport,
};

use crate::diffusion::{perturb, ReverseNoise};
use crate::env::SlotMetrics;
use crate::random::Rng;
use crate::replay::RperConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AgentKind {
    /// DDPG with the diffusion actor and prioritized recent-experience replay.
    #[default]
    Gdmddpg,
    Ddpg,
    Td3,
    Random,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Gdmddpg => "gdmddpg",
            AgentKind::Ddpg => "ddpg",
            AgentKind::Td3 => "td3",
            AgentKind::Random => "random",
        }
    }

    pub fn learns(self) -> bool {
        self != AgentKind::Random
    }
}

/// Which objective the training reward carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Ablation {
    #[default]
    Full,
    CommOnly,
    SenseOnly,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiffusionConfig {
    /// Number of denoising steps `G`.
    pub steps: usize,
    pub c1: f64,
    pub c2: f64,
    pub embed_dim: usize,
    pub reverse_noise: ReverseNoise,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            steps: 5,
            c1: 0.1,
            c2: 10.0,
            embed_dim: 16,
            reverse_noise: ReverseNoise::StdDev,
        }
    }
}

/// Gaussian action perturbation with a linearly decaying scale.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExplorationConfig {
    pub sigma_start: f64,
    pub sigma_end: f64,
    /// Fraction of the episodes over which the scale decays.
    pub decay_fraction: f64,
    /// Clip bound `b` on each noise sample.
    pub bound: f64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            sigma_start: 0.1,
            sigma_end: 0.02,
            decay_fraction: 0.5,
            bound: 0.5,
        }
    }
}

impl ExplorationConfig {
    /// Scale used in episode `episode` (0-based) of `total`.
    pub fn sigma(&self, episode: usize, total: usize) -> f64 {
        let span = self.decay_fraction * total as f64;
        let frac = if span > 0.0 { episode as f64 / span } else { 1.0 };
        if frac >= 1.0 {
            return self.sigma_end;
        }
        self.sigma_start + (self.sigma_end - self.sigma_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Td3Config {
    pub policy_delay: usize,
    pub target_noise: f64,
    pub noise_clip: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Td3Config {
            policy_delay: 2,
            target_noise: 0.2,
            noise_clip: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub ablation: Ablation,
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    /// Mini-batch size `B`; updates start once the buffer holds `B` entries.
    pub batch: usize,
    /// Soft-update rate `ε`.
    pub tau: f64,
    pub episodes: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub diffusion: DiffusionConfig,
    pub exploration: ExplorationConfig,
    pub replay: RperConfig,
    /// Prioritized recent-experience sampling; uniform over the buffer when off.
    pub prioritized: bool,
    /// Final value of the importance exponent, reached linearly at the last episode.
    pub beta2_end: f64,
    pub td3: Td3Config,
    /// Global gradient-norm bound for both networks.
    pub grad_clip: f64,
    /// Reward scale of the single-objective ablations.
    pub ablation_scale: f64,
}

impl AgentConfig {
    /// Laptop-sized profile.
    pub fn desk(kind: AgentKind) -> Self {
        AgentConfig {
            kind,
            ablation: Ablation::Full,
            gamma: 0.99,
            // at 5e-4 the final actor sometimes pins the UAV against a wall
            lr_actor: 1e-4,
            lr_critic: 5e-4,
            batch: 64,
            tau: 0.005,
            episodes: 600,
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            // c2 = 10 drives x_0 of the initial chain into tanh saturation
            diffusion: DiffusionConfig {
                steps: 3,
                c2: 1.0,
                ..DiffusionConfig::default()
            },
            exploration: ExplorationConfig::default(),
            replay: RperConfig {
                capacity: 20_000,
                f_min: 1000,
                ..RperConfig::default()
            },
            prioritized: kind == AgentKind::Gdmddpg,
            beta2_end: 1.0,
            td3: Td3Config::default(),
            grad_clip: 1.0,
            ablation_scale: 10.0,
        }
    }

    /// Full-size profile.
    pub fn paper(kind: AgentKind) -> Self {
        AgentConfig {
            lr_actor: 5e-4,
            batch: 128,
            episodes: 4500,
            actor_hidden: vec![256, 256],
            critic_hidden: vec![256, 256],
            diffusion: DiffusionConfig::default(),
            replay: RperConfig::default(),
            ..AgentConfig::desk(kind)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1]".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.tau >= 0.0 && self.tau <= 1.0) {
            return Err(Error::InvalidConfig("soft-update rate must lie in [0, 1]".into()));
        }
        if !(self.lr_actor >= 0.0 && self.lr_critic >= 0.0) {
            return Err(Error::InvalidConfig("learning rates must be nonnegative".into()));
        }
        if self.diffusion.steps == 0 || self.diffusion.embed_dim % 2 == 1 {
            return Err(Error::InvalidConfig(
                "diffusion needs G >= 1 and an even embedding width".into(),
            ));
        }
        if self.td3.policy_delay == 0 {
            return Err(Error::InvalidConfig("policy delay must be at least 1".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::InvalidConfig("gradient clip must be positive".into()));
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        self.replay.validate()
    }
}

/// Training reward under an ablation. `env_reward` is the full reward the
/// environment returned for the same slot.
pub fn ablation_reward(kind: Ablation, env_reward: f64, m: &SlotMetrics, scale: f64) -> f64 {
    match kind {
        Ablation::Full => env_reward,
        Ablation::CommOnly => scale * m.r_u - m.penalty,
        Ablation::SenseOnly => scale * m.r_st - m.penalty,
    }
}

/// Importance-weighted squared TD loss `(1/B)·Σ ω_b (Q_b − y_b)²`.
///
/// Returns the loss, the TD errors `δ_b = Q_b − y_b` and `∂loss/∂Q_b`.
pub fn critic_loss(q: &[f64], y: &[f64], weights: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let b = q.len().max(1) as f64;
    let td: Vec<f64> = q.iter().zip(y).map(|(q, y)| q - y).collect();
    let loss = td.iter().zip(weights).map(|(d, w)| w * d * d).sum::<f64>() / b;
    let grad = td.iter().zip(weights).map(|(d, w)| 2.0 * w * d / b).collect();
    (loss, td, grad)
}

/// Bootstrapped targets `r + γ·(1 − done)·Q'`.
pub fn td_targets(rewards: &[f64], dones: &[bool], q_next: &[f64], gamma: f64) -> Vec<f64> {
    rewards
        .iter()
        .zip(dones)
        .zip(q_next)
        .map(|((r, &d), q)| if d { *r } else { r + gamma * q })
        .collect()
}

/// `−(1/B)·Σ Q(s_b, μ(s_b))`.
pub fn actor_loss(q: &[f64]) -> f64 {
    -q.iter().sum::<f64>() / q.len().max(1) as f64
}

/// Element-wise minimum of the twin critics.
pub fn twin_min(q1: &[f64], q2: &[f64]) -> Vec<f64> {
    q1.iter().zip(q2).map(|(a, b)| a.min(*b)).collect()
}

/// Target-policy smoothing: `clip(a + clip(N(0, σ), −c, c), −1, 1)`.
pub fn smoothed_target_action(actions: &[f64], cfg: &Td3Config, rng: &mut Rng) -> Vec<f64> {
    perturb(actions, cfg.target_noise, cfg.noise_clip, rng)
}

/// Whether the actor (and the targets) move at critic update `update` (1-based).
pub fn actor_due(update: usize, delay: usize) -> bool {
    update.is_multiple_of(delay.max(1))
}

/// Concatenates state and action rows into critic input rows.
pub fn critic_input(states: &[f64], actions: &[f64], batch: usize) -> Vec<f64> {
    let sd = states.len() / batch.max(1);
    let ad = actions.len() / batch.max(1);
    let mut out = Vec::with_capacity(batch * (sd + ad));
    for b in 0..batch {
        out.extend_from_slice(&states[b * sd..(b + 1) * sd]);
        out.extend_from_slice(&actions[b * ad..(b + 1) * ad]);
    }
    out
}
