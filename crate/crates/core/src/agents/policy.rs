//! Actor networks behind one interface: the diffusion actor or a plain MLP
//! with a tanh head.

use alloc::vec::Vec;

use crate::diffusion::{ChainNoise, ChainTrace, DiffusionActor};
use crate::nn::{Mlp, Tape};
use crate::random::Rng;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Diffusion(DiffusionActor),
    Mlp(Mlp),
}

/// Forward record needed to differentiate a batch of actions.
#[derive(Debug, Clone)]
pub enum PolicyTrace {
    Diffusion(ChainTrace),
    Mlp(Tape),
}

impl Policy {
    pub fn params(&self) -> &[f64] {
        match self {
            Policy::Diffusion(a) => &a.denoiser.net.params.values,
            Policy::Mlp(m) => &m.params.values,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Policy::Diffusion(a) => &mut a.denoiser.net.params.values,
            Policy::Mlp(m) => &mut m.params.values,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Policy::Diffusion(a) => a.action_dim(),
            Policy::Mlp(m) => m.spec.output(),
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Policy::Diffusion(a) => a.state_dim(),
            Policy::Mlp(m) => m.spec.input(),
        }
    }

    /// Actions in `[−1, 1]` for a batch of states. The diffusion actor draws
    /// its chain noise from `rng`; the MLP ignores it.
    pub fn act(&self, states: &[f64], batch: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            Policy::Diffusion(a) => a.sample_action(states, batch, rng),
            Policy::Mlp(m) => m.forward(states, batch),
        }
    }

    /// Deterministic action: zero chain noise for the diffusion actor.
    pub fn act_greedy(&self, states: &[f64], batch: usize) -> Result<Vec<f64>> {
        match self {
            Policy::Diffusion(a) => a.greedy_action(states, batch),
            Policy::Mlp(m) => m.forward(states, batch),
        }
    }

    pub fn act_traced(&self, states: &[f64], batch: usize, rng: &mut Rng) -> Result<(Vec<f64>, PolicyTrace)> {
        match self {
            Policy::Diffusion(a) => {
                let noise = ChainNoise::sample(a.schedule.steps(), batch * a.action_dim(), rng);
                let trace = a.run_chain(states, batch, &noise)?;
                Ok((trace.actions.clone(), PolicyTrace::Diffusion(trace)))
            }
            Policy::Mlp(m) => {
                let tape = m.forward_tape(states, batch)?;
                Ok((tape.output().to_vec(), PolicyTrace::Mlp(tape)))
            }
        }
    }

    /// Accumulates `∂L/∂params` given `∂L/∂actions`.
    pub fn backward(&self, trace: &PolicyTrace, grad_actions: &[f64], grads: &mut [f64]) -> Result<()> {
        match (self, trace) {
            (Policy::Diffusion(a), PolicyTrace::Diffusion(t)) => a.backward(t, grad_actions, grads),
            (Policy::Mlp(m), PolicyTrace::Mlp(t)) => m.backward(t, grad_actions, Some(grads)).map(|_| ()),
            _ => Err(crate::Error::InvalidConfig(
                "trace does not belong to this policy".into(),
            )),
        }
    }
}
