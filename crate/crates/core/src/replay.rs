//! Recency-restricted prioritized replay.
//!
//! Transitions live in a ring buffer. Sampling can be restricted to the
//! `F` most recent entries, which form a (possibly wrapping) segment of the
//! ring; a sum tree over `p^β₁` answers prefix queries on that segment in
//! `O(log n)`, and a max tree tracks the largest raw priority for insertion.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::math;
use crate::random::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub state: Vec<f64>,
    /// Raw actor output in `[−1, 1]`, before decoding.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RperConfig {
    /// Capacity `B_max`.
    pub capacity: usize,
    /// Window floor `F_min`.
    pub f_min: usize,
    /// Recency factor `ρ ∈ (0, 1]`.
    pub rho: f64,
    /// Priority exponent `β₁`.
    pub beta1: f64,
    /// Importance-sampling exponent `β₂`.
    pub beta2: f64,
    /// Priority floor `ε_p`.
    pub eps_p: f64,
    /// Divide importance weights by their batch maximum.
    pub normalize_weights: bool,
}

impl Default for RperConfig {
    fn default() -> Self {
        RperConfig {
            capacity: 100_000,
            f_min: 3000,
            rho: 0.996,
            beta1: 0.6,
            beta2: 0.4,
            eps_p: 1e-3,
            normalize_weights: true,
        }
    }
}

impl RperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("replay capacity must be positive".into()));
        }
        if self.f_min > self.capacity {
            return Err(Error::InvalidConfig("F_min exceeds capacity".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidConfig("rho must lie in (0, 1]".into()));
        }
        if !(self.eps_p > 0.0) || !(self.beta1 >= 0.0) || !(self.beta2 >= 0.0) {
            return Err(Error::InvalidConfig(
                "eps_p must be positive and exponents nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Window size for update `u` of `total` updates in the current phase:
/// `min(⌊max(B_max·ρ^(u·1000/U), F_min)⌋, size)`.
pub fn ere_range(u: usize, total: usize, cfg: &RperConfig, size: usize) -> usize {
    let total = total.max(1) as f64;
    let decayed = cfg.capacity as f64 * math::powf(cfg.rho, u as f64 * 1000.0 / total);
    let f = math::floor(decayed.max(cfg.f_min as f64)) as usize;
    f.min(size)
}

/// Complete binary tree with sum and max aggregates over `leaves` slots.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    sum: Vec<f64>,
    max: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        SumTree {
            leaves,
            sum: vec![0.0; 2 * leaves],
            max: vec![0.0; 2 * leaves],
        }
    }

    /// Sets slot `i` to sum weight `w` and max key `m`.
    pub fn set(&mut self, i: usize, w: f64, m: f64) {
        let mut k = i + self.leaves;
        self.sum[k] = w;
        self.max[k] = m;
        while k > 1 {
            k /= 2;
            self.sum[k] = self.sum[2 * k] + self.sum[2 * k + 1];
            self.max[k] = self.max[2 * k].max(self.max[2 * k + 1]);
        }
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.sum[i + self.leaves]
    }

    pub fn total(&self) -> f64 {
        self.sum[1]
    }

    pub fn max(&self) -> f64 {
        self.max[1]
    }

    /// Sum of weights in slots `0..end`.
    pub fn prefix(&self, end: usize) -> f64 {
        if end >= self.leaves {
            return self.total();
        }
        let mut k = end + self.leaves;
        let mut acc = 0.0;
        while k > 1 {
            if k % 2 == 1 {
                acc += self.sum[k - 1];
            }
            k /= 2;
        }
        acc
    }

    /// Smallest slot `i` whose inclusive prefix sum exceeds `mass`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.sum[2 * k];
            if mass < left || self.sum[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                mass -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

/// Indices (ring slots) and importance weights of one sampled batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Flattened batch ready for the networks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub size: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
    pub dones: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    cfg: RperConfig,
    data: Vec<Transition>,
    priorities: Vec<f64>,
    tree: SumTree,
    /// Next slot to write.
    head: usize,
}

impl ReplayBuffer {
    pub fn new(cfg: RperConfig) -> Result<Self> {
        cfg.validate()?;
        let tree = SumTree::new(cfg.capacity);
        Ok(ReplayBuffer {
            data: Vec::with_capacity(cfg.capacity.min(1 << 16)),
            priorities: Vec::with_capacity(cfg.capacity.min(1 << 16)),
            tree,
            head: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &RperConfig {
        &self.cfg
    }

    pub fn set_beta2(&mut self, beta2: f64) {
        self.cfg.beta2 = beta2;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.cfg.capacity
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.data.get(slot)
    }

    pub fn priority(&self, slot: usize) -> Option<f64> {
        self.priorities.get(slot).copied()
    }

    /// Largest raw priority currently stored (1.0 when empty).
    pub fn max_priority(&self) -> f64 {
        if self.is_empty() {
            1.0
        } else {
            self.tree.max()
        }
    }

    /// Sum of `p^β₁` over all live entries.
    pub fn total_weight(&self) -> f64 {
        self.tree.total()
    }

    /// Stores `t` at the maximum current priority, evicting the oldest entry
    /// once full. Returns the slot written.
    pub fn push(&mut self, t: Transition) -> usize {
        let p = self.max_priority();
        let slot = self.head;
        if self.data.len() < self.cfg.capacity {
            self.data.push(t);
            self.priorities.push(p);
        } else {
            self.data[slot] = t;
            self.priorities[slot] = p;
        }
        self.tree.set(slot, math::powf(p, self.cfg.beta1), p);
        self.head = (self.head + 1) % self.cfg.capacity;
        slot
    }

    /// Ring segments `[start, end)` holding the `window` most recent entries.
    fn segments(&self, window: usize) -> [(usize, usize); 2] {
        let newest_end = if self.data.len() < self.cfg.capacity {
            self.data.len()
        } else if self.head == 0 {
            self.cfg.capacity
        } else {
            self.head
        };
        if window <= newest_end {
            [(newest_end - window, newest_end), (0, 0)]
        } else {
            let rest = window - newest_end;
            [(self.cfg.capacity - rest, self.cfg.capacity), (0, newest_end)]
        }
    }

    /// Sampling probability `P_i` of slot `i` within the `window` most recent entries.
    pub fn probability(&self, slot: usize, window: usize) -> f64 {
        let segs = self.segments(window.min(self.len()));
        let mass: f64 = segs
            .iter()
            .map(|&(a, b)| self.tree.prefix(b) - self.tree.prefix(a))
            .sum();
        let inside = segs.iter().any(|&(a, b)| slot >= a && slot < b);
        if !inside || mass <= 0.0 {
            0.0
        } else {
            self.tree.weight(slot) / mass
        }
    }

    /// Draws `batch` slots with replacement from the `window` most recent
    /// entries with probability `∝ p^β₁`; weights are `(1/(B_max·P))^β₂`.
    pub fn sample_batch(&self, batch: usize, window: usize, rng: &mut Rng) -> Result<Sample> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let window = window.clamp(1, self.len());
        let segs = self.segments(window);
        let bounds: Vec<(usize, usize, f64, f64)> = segs
            .iter()
            .map(|&(a, b)| (a, b, self.tree.prefix(a), self.tree.prefix(b)))
            .collect();
        let mass: f64 = bounds.iter().map(|s| s.3 - s.2).sum();
        let mut indices = Vec::with_capacity(batch);
        let mut weights = Vec::with_capacity(batch);
        for _ in 0..batch {
            let mut u = rng.random::<f64>() * mass;
            let last = bounds.iter().rposition(|s| s.1 > s.0).unwrap_or(0);
            let mut slot = segs[0].0;
            for (k, &(a, b, lo, hi)) in bounds.iter().enumerate() {
                if b <= a {
                    continue;
                }
                let seg = hi - lo;
                if u < seg || k == last {
                    slot = self.tree.find(lo + u.min(seg)).clamp(a, b - 1);
                    break;
                }
                u -= seg;
            }
            let p = self.tree.weight(slot) / mass;
            indices.push(slot);
            weights.push(math::powf(1.0 / (self.cfg.capacity as f64 * p), self.cfg.beta2));
        }
        if self.cfg.normalize_weights {
            let wmax = weights.iter().cloned().fold(0.0, f64::max);
            if wmax > 0.0 {
                for w in &mut weights {
                    *w /= wmax;
                }
            }
        }
        Ok(Sample { indices, weights })
    }

    /// Uniform draws with replacement over the whole buffer, unit weights.
    pub fn sample_uniform(&self, batch: usize, rng: &mut Rng) -> Result<Sample> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.len();
        let indices = (0..batch).map(|_| rng.random_range(0..n)).collect();
        Ok(Sample {
            indices,
            weights: vec![1.0; batch],
        })
    }

    /// Sets priority `|δ| + ε_p` for each sampled slot.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[f64]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::mismatch("td error count", indices.len(), td_errors.len()));
        }
        for (&i, &d) in indices.iter().zip(td_errors) {
            if i >= self.len() {
                return Err(Error::OutOfRange(alloc::format!("replay slot {i}")));
            }
            let p = d.abs() + self.cfg.eps_p;
            if !p.is_finite() {
                return Err(Error::OutOfRange(alloc::format!("non-finite td error at slot {i}")));
            }
            self.priorities[i] = p;
            self.tree.set(i, math::powf(p, self.cfg.beta1), p);
        }
        Ok(())
    }

    /// Copies the given slots into contiguous arrays.
    pub fn gather(&self, indices: &[usize]) -> Batch {
        let mut b = Batch {
            size: indices.len(),
            ..Batch::default()
        };
        for &i in indices {
            let t = &self.data[i];
            b.states.extend_from_slice(&t.state);
            b.actions.extend_from_slice(&t.action);
            b.rewards.push(t.reward);
            b.next_states.extend_from_slice(&t.next_state);
            b.dones.push(t.done);
        }
        b
    }
}
