//! Run configuration: a profile default (desk or paper scale) with JSON
//! overrides merged on top.

use std::fs;
use std::path::Path;

use isac_core::agents::{AgentConfig, AgentKind};
use isac_core::env::Scenario;
use isac_core::geometry::Position;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::LabError;

/// Experiment axis varied across sweep cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    None,
    /// BS power budget in dBm.
    PMaxDbm,
    /// UAV altitude in meters.
    ZR,
    /// BS antenna count.
    Antennas,
    /// UAV start position.
    UavStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Point(Position),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<SweepValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub sweep: Sweep,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            sweep: Sweep::default(),
            seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub scenario: Scenario,
    pub agent: AgentConfig,
    /// Greedy evaluation episodes after training.
    pub eval_episodes: usize,
    pub experiment: ExperimentSpec,
}

impl LabConfig {
    pub fn desk() -> Self {
        LabConfig {
            scenario: Scenario::desk(),
            agent: AgentConfig::desk(AgentKind::Gdmddpg),
            eval_episodes: 10,
            experiment: ExperimentSpec::default(),
        }
    }

    pub fn paper() -> Self {
        LabConfig {
            scenario: Scenario::paper(),
            agent: AgentConfig::paper(AgentKind::Gdmddpg),
            ..LabConfig::desk()
        }
    }

    pub fn profile(paper_scale: bool) -> Self {
        if paper_scale {
            Self::paper()
        } else {
            Self::desk()
        }
    }

    /// Profile defaults for agent `kind`.
    pub fn profile_for(paper_scale: bool, kind: AgentKind) -> Self {
        let agent = if paper_scale {
            AgentConfig::paper(kind)
        } else {
            AgentConfig::desk(kind)
        };
        LabConfig {
            agent,
            ..Self::profile(paper_scale)
        }
    }

    /// Profile defaults with `overrides` merged in. Objects merge key by key,
    /// everything else replaces the default; unknown keys are rejected. The
    /// agent defaults follow `agent.kind` when it is overridden.
    pub fn with_overrides(paper_scale: bool, overrides: &Value) -> Result<Self, LabError> {
        let kind = match overrides.pointer("/agent/kind") {
            Some(k) => AgentKind::deserialize(k)?,
            None => AgentKind::default(),
        };
        let mut base = serde_json::to_value(Self::profile_for(paper_scale, kind))?;
        merge(&mut base, overrides, "")?;
        let cfg: LabConfig = serde_json::from_value(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str, paper_scale: bool) -> Result<Self, LabError> {
        let v: Value = serde_json::from_str(text)?;
        Self::with_overrides(paper_scale, &v)
    }

    /// Loads `path` when given, otherwise the bare profile.
    pub fn load(path: Option<&Path>, paper_scale: bool) -> Result<Self, LabError> {
        match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| LabError::io(p, e))?;
                Self::from_json_str(&text, paper_scale)
            }
            None => {
                let cfg = Self::profile(paper_scale);
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        self.scenario.validate()?;
        self.agent.validate()?;
        if self.experiment.seeds.is_empty() {
            return Err(LabError::Config("experiment.seeds must not be empty".into()));
        }
        let sweep = &self.experiment.sweep;
        match sweep.axis {
            Axis::None => {
                if !sweep.values.is_empty() {
                    return Err(LabError::Config("sweep values given without an axis".into()));
                }
            }
            axis => {
                if sweep.values.is_empty() {
                    return Err(LabError::Config("sweep axis given without values".into()));
                }
                for v in &sweep.values {
                    self.apply(axis, *v)?.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Scenario for one sweep cell.
    pub fn apply(&self, axis: Axis, value: SweepValue) -> Result<Scenario, LabError> {
        let mut sc = self.scenario.clone();
        let bad = |what: &str| LabError::Config(format!("invalid {what} sweep value {value:?}"));
        match (axis, value) {
            (Axis::None, _) => {}
            (Axis::PMaxDbm, SweepValue::Number(dbm)) if dbm.is_finite() => {
                sc.p_max = isac_core::math::dbm_to_watts(dbm);
            }
            (Axis::ZR, SweepValue::Number(z)) if z > 0.0 => {
                sc.z_r = z;
                sc.uav_start.z = z;
            }
            (Axis::Antennas, SweepValue::Number(m)) if m >= 1.0 && m.fract() == 0.0 => {
                sc.antennas = m as usize;
            }
            (Axis::UavStart, SweepValue::Point(p)) => {
                sc.uav_start = Position::new(p.x, p.y, sc.z_r);
            }
            (Axis::PMaxDbm, _) => return Err(bad("p_max_dbm")),
            (Axis::ZR, _) => return Err(bad("z_r")),
            (Axis::Antennas, _) => return Err(bad("antennas")),
            (Axis::UavStart, _) => return Err(bad("uav_start")),
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn merge(base: &mut Value, over: &Value, path: &str) -> Result<(), LabError> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let here = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &here)?,
                    None => return Err(LabError::Config(format!("unknown key `{here}`"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v.clone();
            Ok(())
        }
    }
}
