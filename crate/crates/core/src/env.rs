//! The episodic decision process: scenario description, state encoding,
//! action decoding, reward and slot stepping.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{phase_matrix, ChannelParams, ChannelRealization};
use crate::comms::{slot_rates, slot_sum_rate, Beamformer};
use crate::geometry::{self, Position};
use crate::linalg::{CMatrix, Complex64};
use crate::math::{self, PI, TAU};
use crate::random::{rng_for, stream, uniform, Rng};
use crate::sensing::{fading_coefficient, sensing_rate, steering_vector, target_gain, SensingParams};
use crate::uav::{propulsion_energy, step_position, EnergyParams};
use crate::{Error, Result};

/// Distance kept below the upper end of half-open angle ranges.
pub const WRAP_EPS: f64 = 1e-12;

/// Seed of the default user/target layout.
pub const LAYOUT_SEED: u64 = 2024;
pub const CLUSTER_CENTER: (f64, f64) = (150.0, 150.0);
pub const CLUSTER_RADIUS: f64 = 60.0;

/// Static description of one deployment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub bs: Position,
    pub users: Vec<Position>,
    pub target: Position,
    pub uav_start: Position,
    /// Flight altitude; overrides `uav_start.z`.
    pub z_r: f64,
    /// Number of slots per episode.
    pub slots: usize,
    /// Slot length in seconds; overrides `energy.t_d`.
    pub t_d: f64,
    /// BS power budget, W.
    pub p_max: f64,
    /// Noise power, W.
    pub sigma2: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// BS antennas `M`.
    pub antennas: usize,
    /// IRS elements `L`.
    pub irs_elements: usize,
    pub channel: ChannelParams,
    pub sensing: SensingParams,
    pub energy: EnergyParams,
    /// Reward scale.
    pub xi1: f64,
    /// Out-of-area penalty.
    pub p_o: f64,
}

impl Scenario {
    /// Full-size deployment: 4 antennas, 16 IRS elements, 3 users, 100 slots.
    pub fn paper() -> Self {
        Self::with_dims(4, 16, 3, 100)
    }

    /// Reduced deployment used for quick experiments: 2 antennas, 8 IRS
    /// elements, 2 users, 40 slots.
    pub fn desk() -> Self {
        Self::with_dims(2, 8, 2, 40)
    }

    pub fn with_dims(antennas: usize, irs_elements: usize, users: usize, slots: usize) -> Self {
        let (users, target) = cluster_layout(users, LAYOUT_SEED);
        Scenario {
            x_min: 0.0,
            x_max: 300.0,
            y_min: 0.0,
            y_max: 300.0,
            bs: Position::new(100.0, 100.0, 10.0),
            users,
            target,
            uav_start: Position::new(0.0, 300.0, 40.0),
            z_r: 40.0,
            slots,
            t_d: 1.0,
            p_max: 1.0,
            sigma2: math::dbm_to_watts(-90.0),
            v_min: 0.0,
            v_max: 30.0,
            antennas,
            irs_elements,
            channel: ChannelParams::default(),
            sensing: SensingParams::default(),
            energy: EnergyParams::default(),
            xi1: 1000.0,
            p_o: 50.0,
        }
    }

    pub fn users(&self) -> usize {
        self.users.len()
    }

    /// Raw action length `2MN + L + 2`.
    pub fn action_dim(&self) -> usize {
        2 * self.antennas * self.users() + self.irs_elements + 2
    }

    /// Encoded state length `1 + 3 + 3N + 3`.
    pub fn state_dim(&self) -> usize {
        1 + 3 + 3 * self.users() + 3
    }

    fn inside(&self, p: Position) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn energy_params(&self) -> EnergyParams {
        EnergyParams {
            t_d: self.t_d,
            ..self.energy
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return bad("empty area");
        }
        if self.users.is_empty() {
            return bad("at least one user is required");
        }
        if self.slots == 0 {
            return bad("slots must be at least 1");
        }
        if self.antennas == 0 || self.irs_elements == 0 {
            return bad("antennas and irs_elements must be at least 1");
        }
        if !(self.t_d > 0.0 && self.p_max > 0.0 && self.sigma2 > 0.0) {
            return bad("t_d, p_max and sigma2 must be positive");
        }
        if !(0.0 <= self.v_min && self.v_min <= self.v_max) {
            return bad("need 0 <= v_min <= v_max");
        }
        if !(self.z_r > 0.0) {
            return bad("z_r must be positive");
        }
        if !(self.xi1 > 0.0 && self.p_o >= 0.0) {
            return bad("xi1 must be positive and p_o non-negative");
        }
        for p in self.users.iter().chain(core::iter::once(&self.target)) {
            if !self.inside(*p) || p.z != 0.0 {
                return bad("users and target must be on the ground inside the area");
            }
        }
        if !self.bs.is_finite() || !self.uav_start.is_finite() {
            return bad("positions must be finite");
        }
        self.channel.validate()?;
        if !(1.5..=7.0).contains(&self.sensing.alpha_r_model) {
            return bad("alpha_r_model must lie in [1.5, 7]");
        }
        self.energy_params().validate()
    }
}

/// Places `n` users and one target uniformly in the default disc cluster.
pub fn cluster_layout(n: usize, seed: u64) -> (Vec<Position>, Position) {
    let mut rng = rng_for(seed, stream::LAYOUT);
    let mut draw = || {
        let r = CLUSTER_RADIUS * math::sqrt(uniform(&mut rng, 0.0, 1.0));
        let a = uniform(&mut rng, 0.0, TAU);
        Position::new(
            CLUSTER_CENTER.0 + r * math::cos(a),
            CLUSTER_CENTER.1 + r * math::sin(a),
            0.0,
        )
    };
    let users = (0..n).map(|_| draw()).collect();
    (users, draw())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// Slot index, 1-based.
    pub t: usize,
    pub q_r: Position,
    pub users: Vec<Position>,
    pub target: Position,
}

/// Flattens the state as
/// `[t/T, uav x, uav y, uav z, user_1 x, y, z, …, target x, y, z]`,
/// with x and y mapped to `[0, 1]` over the area and z divided by the larger
/// area side.
pub fn encode_state(state: &EnvState, sc: &Scenario) -> Vec<f64> {
    let w = sc.x_max - sc.x_min;
    let h = sc.y_max - sc.y_min;
    let side = w.max(h);
    let mut out = Vec::with_capacity(sc.state_dim());
    out.push(state.t as f64 / sc.slots as f64);
    let mut put = |p: &Position| {
        out.push((p.x - sc.x_min) / w);
        out.push((p.y - sc.y_min) / h);
        out.push(p.z / side);
    };
    put(&state.q_r);
    state.users.iter().for_each(&mut put);
    put(&state.target);
    out
}

/// Physical control decoded from a raw action.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub beamformer: Beamformer,
    /// IRS phases in `[0, 2π)`.
    pub phases: Vec<f64>,
    pub speed: f64,
    /// Yaw in `[−π, π)`.
    pub yaw: f64,
}

/// Decodes a raw action in `[−1, 1]^D`.
///
/// Layout: `2MN` beamformer reals as (Re, Im) pairs, column by column
/// (`ω_1` first), each scaled by `√P_max` and then projected onto the power
/// budget; `L` phases `θ_l = (raw + 1)π`; speed; yaw `raw·π`.
pub fn decode_action(raw: &[f64], sc: &Scenario) -> Result<Action> {
    let (m, n, l) = (sc.antennas, sc.users(), sc.irs_elements);
    if raw.len() != sc.action_dim() {
        return Err(Error::mismatch("raw action length", sc.action_dim(), raw.len()));
    }
    let clip = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    let amp = math::sqrt(sc.p_max);
    let mut w = CMatrix::zeros(m, n);
    for col in 0..n {
        for row in 0..m {
            let k = 2 * (col * m + row);
            w[(row, col)] = Complex64::new(amp * clip(raw[k]), amp * clip(raw[k + 1]));
        }
    }
    let mut beamformer = Beamformer(w);
    beamformer.project(sc.p_max);
    let base = 2 * m * n;
    let phases = raw[base..base + l]
        .iter()
        .map(|&r| ((clip(r) + 1.0) * PI).min(TAU - WRAP_EPS))
        .collect();
    let speed = sc.v_min + (clip(raw[base + l]) + 1.0) / 2.0 * (sc.v_max - sc.v_min);
    let yaw = (clip(raw[base + l + 1]) * PI).clamp(-PI, PI - WRAP_EPS);
    Ok(Action {
        beamformer,
        phases,
        speed,
        yaw,
    })
}

/// `ξ1·R_U·R_ST/E_u − PV`.
pub fn reward(r_u: f64, r_st: f64, e_u: f64, violated: bool, sc: &Scenario) -> f64 {
    sc.xi1 * r_u * r_st / e_u - penalty(violated, sc)
}

pub fn penalty(violated: bool, sc: &Scenario) -> f64 {
    if violated {
        sc.p_o
    } else {
        0.0
    }
}

/// Per-slot physical outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotMetrics {
    pub t: usize,
    /// Sum rate over users, bits/s/Hz.
    pub r_u: f64,
    /// Sensing rate, bits/s/Hz.
    pub r_st: f64,
    /// Propulsion energy, J.
    pub e_u: f64,
    pub violated: bool,
    /// Penalty subtracted from the reward in this slot.
    pub penalty: f64,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub metrics: SlotMetrics,
}

/// Gym-style interface the trainers run against.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn slots(&self) -> usize;
    /// Starts a new episode and returns the encoded initial state.
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, raw_action: &[f64]) -> Result<Step>;
}

/// The low-altitude IRS ISAC environment.
#[derive(Debug, Clone)]
pub struct IsacEnv {
    scenario: Scenario,
    state: EnvState,
    finished: bool,
    rng: Rng,
}

impl IsacEnv {
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self> {
        Self::with_stream(scenario, seed, stream::ENV)
    }

    /// Instance whose fading draws are independent of the training instance
    /// built from the same seed.
    pub fn for_evaluation(scenario: Scenario, seed: u64) -> Result<Self> {
        Self::with_stream(scenario, seed, stream::EVAL_ENV)
    }

    fn with_stream(scenario: Scenario, seed: u64, id: u64) -> Result<Self> {
        scenario.validate()?;
        let state = initial_state(&scenario);
        Ok(IsacEnv {
            scenario,
            state,
            finished: false,
            rng: rng_for(seed, id),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    /// Restarts the episode and the fading stream from `seed`.
    pub fn reset_with_seed(&mut self, seed: u64) -> EnvState {
        self.rng = rng_for(seed, stream::ENV);
        Environment::reset(self);
        self.state.clone()
    }

    /// Plays one slot with an already decoded action.
    pub fn step_action(&mut self, action: &Action) -> Result<(f64, SlotMetrics)> {
        if self.finished {
            return Err(Error::EpisodeFinished(self.state.t));
        }
        let sc = &self.scenario;
        let moved = step_position(self.state.q_r, action.speed, action.yaw, sc.t_d);
        let violated = !sc.inside(moved);
        let q_r = Position::new(
            moved.x.clamp(sc.x_min, sc.x_max),
            moved.y.clamp(sc.y_min, sc.y_max),
            sc.z_r,
        );

        let phi = phase_matrix(&action.phases)?;
        let mut ch = ChannelRealization::draw(
            &sc.channel,
            sc.antennas,
            sc.irs_elements,
            sc.bs,
            q_r,
            &sc.users,
            &mut self.rng,
        )?;
        ch.compose(&phi)?;
        let rates = slot_rates(&ch.composite, &action.beamformer, sc.sigma2)?;
        let r_u = slot_sum_rate(&rates);

        let sin_theta = geometry::sensing_sin_angle(q_r, sc.target)?;
        let a = steering_vector(sc.irs_elements, sin_theta, sc.channel.d_r_over_lambda);
        let alpha_r = fading_coefficient(sc.channel.l0, geometry::distance(q_r, sc.target), &sc.sensing);
        let gain = target_gain(&a, &phi, &ch.h_br, &action.beamformer, alpha_r)?;
        let r_st = sensing_rate(gain, sc.sigma2);

        let e_u = propulsion_energy(action.speed, &sc.energy_params())?;
        let r = reward(r_u, r_st, e_u, violated, sc);
        let metrics = SlotMetrics {
            t: self.state.t,
            r_u,
            r_st,
            e_u,
            violated,
            penalty: penalty(violated, sc),
            position: q_r,
        };

        self.state.q_r = q_r;
        if self.state.t == sc.slots {
            self.finished = true;
        } else {
            self.state.t += 1;
        }
        Ok((r, metrics))
    }
}

fn initial_state(sc: &Scenario) -> EnvState {
    EnvState {
        t: 1,
        q_r: Position::new(sc.uav_start.x, sc.uav_start.y, sc.z_r),
        users: sc.users.clone(),
        target: sc.target,
    }
}

impl Environment for IsacEnv {
    fn state_dim(&self) -> usize {
        self.scenario.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.scenario.action_dim()
    }

    fn slots(&self) -> usize {
        self.scenario.slots
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = initial_state(&self.scenario);
        self.finished = false;
        encode_state(&self.state, &self.scenario)
    }

    fn step(&mut self, raw_action: &[f64]) -> Result<Step> {
        let action = decode_action(raw_action, &self.scenario)?;
        let (reward, metrics) = self.step_action(&action)?;
        Ok(Step {
            next_state: encode_state(&self.state, &self.scenario),
            reward,
            done: self.finished,
            metrics,
        })
    }
}

/// Episode totals of the three objectives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeTotals {
    pub reward: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub violations: usize,
    pub slots: usize,
}

impl EpisodeTotals {
    pub fn add(&mut self, reward: f64, m: &SlotMetrics) {
        self.reward += reward;
        self.f1 += m.r_u;
        self.f2 += m.r_st;
        self.f3 += m.e_u;
        self.violations += usize::from(m.violated);
        self.slots += 1;
    }

    pub fn mean_reward(&self) -> f64 {
        self.reward / self.slots.max(1) as f64
    }

    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.slots.max(1) as f64
    }
}

/// Plays one episode with a fixed sequence of raw actions; returns per-slot
/// rewards and metrics.
pub fn replay_actions(env: &mut IsacEnv, actions: &[Vec<f64>]) -> Result<Vec<(f64, SlotMetrics)>> {
    Environment::reset(env);
    let mut out = vec![];
    for a in actions {
        let s = env.step(a)?;
        out.push((s.reward, s.metrics));
        if s.done {
            break;
        }
    }
    Ok(out)
}
