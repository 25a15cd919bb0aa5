//! Diffusion actor: variance-preserving noise schedule, forward noising (used
//! by tests), the state-conditioned reverse denoising chain and the
//! exploration perturbation applied to its output.
//!
//! Steps are 1-based throughout: `g ∈ 1..=G`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::nn::{step_embedding, Activation, Mlp, MlpSpec, Tape};
use crate::random::{fill_normal, normal, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_hat: Vec<f64>,
    beta_tilde: Vec<f64>,
}

impl DiffusionSchedule {
    /// Builds the derived arrays from `β_1..β_G`.
    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || !beta.iter().all(|b| *b > 0.0 && *b < 1.0) {
            return Err(Error::InvalidConfig("betas must lie in (0, 1)".into()));
        }
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_hat = Vec::with_capacity(beta.len());
        let mut acc = 1.0;
        for a in &alpha {
            acc *= a;
            alpha_hat.push(acc);
        }
        let beta_tilde = (0..beta.len())
            .map(|i| {
                let prev = if i == 0 { 1.0 } else { alpha_hat[i - 1] };
                (1.0 - prev) / (1.0 - alpha_hat[i]) * beta[i]
            })
            .collect();
        Ok(DiffusionSchedule {
            beta,
            alpha,
            alpha_hat,
            beta_tilde,
        })
    }

    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, g: usize) -> f64 {
        self.beta[g - 1]
    }

    pub fn alpha(&self, g: usize) -> f64 {
        self.alpha[g - 1]
    }

    /// `α̂_g = Π_{i≤g} α_i`, with `α̂_0 = 1`.
    pub fn alpha_hat(&self, g: usize) -> f64 {
        if g == 0 {
            1.0
        } else {
            self.alpha_hat[g - 1]
        }
    }

    /// Posterior variance `β̃_g = (1 − α̂_{g−1})/(1 − α̂_g)·β_g`.
    pub fn beta_tilde(&self, g: usize) -> f64 {
        self.beta_tilde[g - 1]
    }

    fn check_step(&self, g: usize) -> Result<()> {
        if g == 0 || g > self.steps() {
            return Err(Error::OutOfRange(alloc::format!(
                "diffusion step {g} outside 1..={}",
                self.steps()
            )));
        }
        Ok(())
    }
}

/// Variance-preserving schedule
/// `β_g = 1 − exp(−c1/G − (2g − 1)/(2G²)·(c2 − c1))`.
pub fn vp_schedule(steps: usize, c1: f64, c2: f64) -> Result<DiffusionSchedule> {
    if steps == 0 {
        return Err(Error::InvalidConfig("diffusion needs at least one step".into()));
    }
    if !(c1 > 0.0 && c2 >= c1) {
        return Err(Error::InvalidConfig("need 0 < c1 <= c2".into()));
    }
    let gf = steps as f64;
    let beta = (1..=steps)
        .map(|g| 1.0 - math::exp(-c1 / gf - (2.0 * g as f64 - 1.0) / (2.0 * gf * gf) * (c2 - c1)))
        .collect();
    DiffusionSchedule::from_betas(beta)
}

/// Closed-form forward noising `x_g = √α̂_g·x0 + √(1 − α̂_g)·ε` with a pinned `ε`.
pub fn forward_sample_with(x0: &[f64], g: usize, sched: &DiffusionSchedule, eps: &[f64]) -> Result<Vec<f64>> {
    sched.check_step(g)?;
    if eps.len() != x0.len() {
        return Err(Error::mismatch("noise length", x0.len(), eps.len()));
    }
    let ah = sched.alpha_hat(g);
    let (a, b) = (math::sqrt(ah), math::sqrt(1.0 - ah));
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

pub fn forward_sample(x0: &[f64], g: usize, sched: &DiffusionSchedule, rng: &mut Rng) -> Result<Vec<f64>> {
    let mut eps = vec![0.0; x0.len()];
    fill_normal(rng, &mut eps);
    forward_sample_with(x0, g, sched, &eps)
}

/// One Markov step `x_g ~ N(√(1 − β_g)·x_{g−1}, β_g)`.
pub fn forward_step(x_prev: &[f64], g: usize, sched: &DiffusionSchedule, rng: &mut Rng) -> Result<Vec<f64>> {
    sched.check_step(g)?;
    let b = sched.beta(g);
    let (a, s) = (math::sqrt(1.0 - b), math::sqrt(b));
    Ok(x_prev.iter().map(|x| a * x + s * normal(rng)).collect())
}

/// How the reverse-step noise is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ReverseNoise {
    /// Standard deviation `√β̃_g`, matching a posterior of variance `β̃_g`.
    #[default]
    StdDev,
    /// Multiplies the noise by `β̃_g²`.
    Squared,
}

impl ReverseNoise {
    fn scale(self, beta_tilde: f64) -> f64 {
        match self {
            ReverseNoise::StdDev => math::sqrt(beta_tilde),
            ReverseNoise::Squared => beta_tilde * beta_tilde,
        }
    }
}

/// Noise-prediction network `ε_η(x_g, g, s)`.
///
/// Input row layout: `[x_g (D) | step embedding (E) | state (S)]`; output `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoiser {
    pub net: Mlp,
    pub action_dim: usize,
    pub state_dim: usize,
    pub embed_dim: usize,
}

impl Denoiser {
    pub fn spec(action_dim: usize, state_dim: usize, embed_dim: usize, hidden: &[usize]) -> MlpSpec {
        MlpSpec::new(
            action_dim + embed_dim + state_dim,
            hidden,
            action_dim,
            Activation::Relu,
            Activation::Identity,
        )
    }

    /// Hidden layers as configured; the output layer starts at zero.
    pub fn init(
        action_dim: usize,
        state_dim: usize,
        embed_dim: usize,
        hidden: &[usize],
        rng: &mut Rng,
    ) -> Result<Self> {
        let net = Mlp::init(Self::spec(action_dim, state_dim, embed_dim, hidden), rng, true)?;
        Ok(Denoiser {
            net,
            action_dim,
            state_dim,
            embed_dim,
        })
    }

    pub fn from_net(net: Mlp, action_dim: usize, state_dim: usize, embed_dim: usize) -> Result<Self> {
        let expect = action_dim + embed_dim + state_dim;
        if net.spec.input() != expect || net.spec.output() != action_dim {
            return Err(Error::mismatch("denoiser input width", expect, net.spec.input()));
        }
        Ok(Denoiser {
            net,
            action_dim,
            state_dim,
            embed_dim,
        })
    }

    fn input(&self, x: &[f64], g: usize, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        let (d, s) = (self.action_dim, self.state_dim);
        if x.len() != batch * d {
            return Err(Error::mismatch("x_g length", batch * d, x.len()));
        }
        if states.len() != batch * s {
            return Err(Error::mismatch("state batch length", batch * s, states.len()));
        }
        let emb = step_embedding(g, self.embed_dim);
        let width = d + self.embed_dim + s;
        let mut out = Vec::with_capacity(batch * width);
        for b in 0..batch {
            out.extend_from_slice(&x[b * d..(b + 1) * d]);
            out.extend_from_slice(&emb);
            out.extend_from_slice(&states[b * s..(b + 1) * s]);
        }
        Ok(out)
    }
}

/// Intermediate values of one reverse step, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepRecord {
    g: usize,
    tape: Tape,
    /// `tanh(ε_η)`
    squashed: Vec<f64>,
}

/// Shared reverse-step arithmetic; returns `x_{g−1}` and the record needed
/// to differentiate it.
#[allow(clippy::too_many_arguments)]
fn reverse_step_inner(
    x: &[f64],
    g: usize,
    states: &[f64],
    sched: &DiffusionSchedule,
    denoiser: &Denoiser,
    noise: &[f64],
    mode: ReverseNoise,
    batch: usize,
) -> Result<(Vec<f64>, StepRecord)> {
    sched.check_step(g)?;
    if noise.len() != x.len() {
        return Err(Error::mismatch("reverse noise length", x.len(), noise.len()));
    }
    let input = denoiser.input(x, g, states, batch)?;
    let tape = denoiser.net.forward_tape(&input, batch)?;
    let squashed: Vec<f64> = tape.output().iter().map(|&e| math::tanh(e)).collect();
    let inv_sqrt_alpha = 1.0 / math::sqrt(sched.alpha(g));
    let c = sched.beta(g) / math::sqrt(1.0 - sched.alpha_hat(g));
    let sigma = if g == 1 { 0.0 } else { mode.scale(sched.beta_tilde(g)) };
    let out = x
        .iter()
        .zip(&squashed)
        .zip(noise)
        .map(|((xi, ti), zi)| inv_sqrt_alpha * (xi - c * ti) + sigma * zi)
        .collect();
    Ok((out, StepRecord { g, tape, squashed }))
}

/// One reverse denoising step for a batch:
/// `x_{g−1} = (x_g − β_g/√(1 − α̂_g)·tanh(ε_η(x_g, g, s)))/√α_g + σ_g·z`,
/// with `σ_g = √β̃_g` and `σ_1 = 0`.
pub fn reverse_step(
    x: &[f64],
    g: usize,
    states: &[f64],
    sched: &DiffusionSchedule,
    denoiser: &Denoiser,
    noise: &[f64],
    mode: ReverseNoise,
) -> Result<Vec<f64>> {
    let batch = x.len().checked_div(denoiser.action_dim).unwrap_or(0);
    reverse_step_inner(x, g, states, sched, denoiser, noise, mode, batch).map(|r| r.0)
}

/// All random inputs of one reverse chain: the starting sample `x_G` and the
/// per-step noises (index `g − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainNoise {
    pub start: Vec<f64>,
    pub steps: Vec<Vec<f64>>,
}

impl ChainNoise {
    pub fn sample(steps: usize, len: usize, rng: &mut Rng) -> Self {
        let mut start = vec![0.0; len];
        fill_normal(rng, &mut start);
        let steps = (0..steps)
            .map(|g| {
                let mut z = vec![0.0; len];
                if g > 0 {
                    fill_normal(rng, &mut z);
                }
                z
            })
            .collect();
        ChainNoise { start, steps }
    }
}

/// Forward record of a full chain.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    batch: usize,
    records: Vec<StepRecord>,
    /// `tanh(x_0)`
    pub actions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionActor {
    pub denoiser: Denoiser,
    pub schedule: DiffusionSchedule,
    pub noise_mode: ReverseNoise,
}

impl DiffusionActor {
    pub fn action_dim(&self) -> usize {
        self.denoiser.action_dim
    }

    pub fn state_dim(&self) -> usize {
        self.denoiser.state_dim
    }

    /// Runs the chain `G → 0` with pinned noise and squashes `x_0` with tanh.
    pub fn run_chain(&self, states: &[f64], batch: usize, noise: &ChainNoise) -> Result<ChainTrace> {
        let g_max = self.schedule.steps();
        let len = batch * self.action_dim();
        if noise.start.len() != len || noise.steps.len() != g_max {
            return Err(Error::mismatch("chain noise size", len, noise.start.len()));
        }
        let mut x = noise.start.clone();
        let mut records = Vec::with_capacity(g_max);
        for g in (1..=g_max).rev() {
            let (next, rec) = reverse_step_inner(
                &x,
                g,
                states,
                &self.schedule,
                &self.denoiser,
                &noise.steps[g - 1],
                self.noise_mode,
                batch,
            )?;
            records.push(rec);
            x = next;
        }
        let actions = x.iter().map(|&v| math::tanh(v)).collect();
        Ok(ChainTrace {
            batch,
            records,
            actions,
        })
    }

    /// Draws fresh chain noise and returns actions in `(−1, 1)`.
    pub fn sample_action(&self, states: &[f64], batch: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        let noise = ChainNoise::sample(self.schedule.steps(), batch * self.action_dim(), rng);
        Ok(self.run_chain(states, batch, &noise)?.actions)
    }

    /// Deterministic action: the chain started at `x_G = 0` with every
    /// reverse-step noise set to zero.
    pub fn greedy_action(&self, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        let len = batch * self.action_dim();
        let noise = ChainNoise {
            start: vec![0.0; len],
            steps: vec![vec![0.0; len]; self.schedule.steps()],
        };
        Ok(self.run_chain(states, batch, &noise)?.actions)
    }

    /// Back-propagates `∂L/∂actions` through the whole chain (noises held
    /// fixed) and accumulates `∂L/∂η` into `param_grads`.
    pub fn backward(&self, trace: &ChainTrace, grad_actions: &[f64], param_grads: &mut [f64]) -> Result<()> {
        let d = self.action_dim();
        let batch = trace.batch;
        if grad_actions.len() != batch * d {
            return Err(Error::mismatch("action gradient length", batch * d, grad_actions.len()));
        }
        // through a = tanh(x_0)
        let mut upstream: Vec<f64> = grad_actions
            .iter()
            .zip(&trace.actions)
            .map(|(g, a)| g * (1.0 - a * a))
            .collect();
        let width = self.denoiser.net.spec.input();
        // records are stored G, G−1, …, 1; walk them back from step 1
        for rec in trace.records.iter().rev() {
            let g = rec.g;
            let inv_sqrt_alpha = 1.0 / math::sqrt(self.schedule.alpha(g));
            let c = self.schedule.beta(g) / math::sqrt(1.0 - self.schedule.alpha_hat(g));
            let grad_eps: Vec<f64> = upstream
                .iter()
                .zip(&rec.squashed)
                .map(|(u, t)| -c * inv_sqrt_alpha * u * (1.0 - t * t))
                .collect();
            let grad_input = self.denoiser.net.backward(&rec.tape, &grad_eps, Some(param_grads))?;
            for b in 0..batch {
                for k in 0..d {
                    upstream[b * d + k] = inv_sqrt_alpha * upstream[b * d + k] + grad_input[b * width + k];
                }
            }
        }
        Ok(())
    }
}

/// Exploration: `clip(ã + clip(N(0, σ̂), −b, b), −1, 1)` per component.
pub fn perturb(actions: &[f64], sigma: f64, bound: f64, rng: &mut Rng) -> Vec<f64> {
    actions
        .iter()
        .map(|&a| perturb_with(a, sigma * normal(rng), bound))
        .collect()
}

/// Perturbation with an already drawn noise sample.
#[inline]
pub fn perturb_with(action: f64, noise: f64, bound: f64) -> f64 {
    (action + noise.clamp(-bound, bound)).clamp(-1.0, 1.0)
}
