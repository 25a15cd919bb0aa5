//! Actor checkpoints: a JSON document holding the configuration the actor was
//! trained under, its network layout and the flat parameter vector.

use std::fs;
use std::path::Path;

use isac_core::agents::{init_policy, AgentConfig, Policy};
use isac_core::env::Scenario;
use isac_core::nn::MlpSpec;
use isac_core::random::{rng_for, stream};
use serde::{Deserialize, Serialize};

use crate::LabError;

pub const FORMAT: &str = "isac-lab/checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub scenario: Scenario,
    pub agent: AgentConfig,
    /// Layout of the actor network; `None` for the random policy.
    pub network: Option<MlpSpec>,
    pub params: Vec<f64>,
}

fn network_of(policy: &Policy) -> &MlpSpec {
    match policy {
        Policy::Diffusion(a) => &a.denoiser.net.spec,
        Policy::Mlp(m) => &m.spec,
    }
}

impl Checkpoint {
    pub fn new(scenario: &Scenario, agent: &AgentConfig, seed: u64, policy: Option<&Policy>) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            seed,
            scenario: scenario.clone(),
            agent: agent.clone(),
            network: policy.map(|p| network_of(p).clone()),
            params: policy.map(|p| p.params().to_vec()).unwrap_or_default(),
        }
    }

    /// Rebuilds the actor; `None` for the random policy.
    pub fn policy(&self) -> Result<Option<Policy>, LabError> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(LabError::Checkpoint(format!(
                "unsupported format {} v{}",
                self.format, self.version
            )));
        }
        let sc = &self.scenario;
        let mut rng = rng_for(self.seed, stream::INIT);
        let fresh = init_policy(&self.agent, sc.state_dim(), sc.action_dim(), &mut rng)?;
        match fresh {
            None if self.network.is_none() && self.params.is_empty() => Ok(None),
            None => Err(LabError::Checkpoint("parameters stored for a random policy".into())),
            Some(mut p) => {
                if self.network.as_ref() != Some(network_of(&p)) {
                    return Err(LabError::Checkpoint(
                        "network layout does not match the agent config".into(),
                    ));
                }
                if self.params.len() != p.params().len() {
                    return Err(LabError::Checkpoint(format!(
                        "expected {} parameters, found {}",
                        p.params().len(),
                        self.params.len()
                    )));
                }
                if !self.params.iter().all(|v| v.is_finite()) {
                    return Err(LabError::Checkpoint("non-finite parameter".into()));
                }
                p.params_mut().copy_from_slice(&self.params);
                Ok(Some(p))
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), LabError> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
