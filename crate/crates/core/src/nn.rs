//! A deliberately small network toolkit: fully connected layers over flat
//! parameter storage, hand-written reverse-mode gradients, Adam, soft target
//! updates and the sinusoidal step embedding.
//!
//! Parameters of layer `k` are stored as the `in × out` weight block
//! (row `i` holds the weights leaving input `i`) followed by `out` biases.
//! Batches are row-major `batch × width`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::random::{uniform, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => math::tanh(z),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpSpec {
    /// Input width, hidden widths…, output width.
    pub widths: Vec<usize>,
    /// One activation per affine layer.
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize, hidden_act: Activation, out_act: Activation) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let mut activations = vec![hidden_act; hidden.len()];
        activations.push(out_act);
        MlpSpec { widths, activations }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::InvalidConfig("an MLP needs at least one hidden layer".into()));
        }
        if self.activations.len() + 1 != self.widths.len() {
            return Err(Error::mismatch(
                "activation count",
                self.widths.len() - 1,
                self.activations.len(),
            ));
        }
        if self.widths.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn input(&self) -> usize {
        self.widths[0]
    }

    pub fn output(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn layers(&self) -> usize {
        self.activations.len()
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Offset of the weight block of each layer.
    fn offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let o = off;
                off += w[0] * w[1] + w[1];
                o
            })
            .collect()
    }
}

/// Flat parameters with a gradient buffer of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        let grads = vec![0.0; values.len()];
        ParamVector { values, grads }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// `acts[0]` is the input, `acts[k]` the output of layer `k`.
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: ParamVector,
}

impl Mlp {
    /// Uniform `±1/√fan_in` initialization of weights and biases; with
    /// `zero_last` the output layer starts at exactly zero.
    pub fn init(spec: MlpSpec, rng: &mut Rng, zero_last: bool) -> Result<Self> {
        spec.validate()?;
        let mut values = Vec::with_capacity(spec.param_count());
        let layers = spec.layers();
        for (k, w) in spec.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / math::sqrt(fan_in as f64);
            for _ in 0..fan_in * fan_out + fan_out {
                let v = if zero_last && k + 1 == layers {
                    0.0
                } else {
                    uniform(rng, -bound, bound)
                };
                values.push(v);
            }
        }
        Ok(Mlp {
            spec,
            params: ParamVector::new(values),
        })
    }

    pub fn from_values(spec: MlpSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.param_count() {
            return Err(Error::mismatch("parameter count", spec.param_count(), values.len()));
        }
        Ok(Mlp {
            spec,
            params: ParamVector::new(values),
        })
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Result<Vec<f64>> {
        let mut tape = self.forward_tape(input, batch)?;
        Ok(tape.acts.pop().unwrap())
    }

    pub fn forward_tape(&self, input: &[f64], batch: usize) -> Result<Tape> {
        let n_in = self.spec.input();
        if input.len() != batch * n_in {
            return Err(Error::mismatch("network input length", batch * n_in, input.len()));
        }
        let p = &self.params.values;
        let mut acts = Vec::with_capacity(self.spec.layers() + 1);
        acts.push(input.to_vec());
        for ((w, &act), off) in self
            .spec
            .widths
            .windows(2)
            .zip(&self.spec.activations)
            .zip(self.spec.offsets())
        {
            let (fi, fo) = (w[0], w[1]);
            let weights = &p[off..off + fi * fo];
            let bias = &p[off + fi * fo..off + fi * fo + fo];
            let x = acts.last().unwrap();
            let mut y = vec![0.0; batch * fo];
            for b in 0..batch {
                let row = &mut y[b * fo..(b + 1) * fo];
                row.copy_from_slice(bias);
                for (i, &xi) in x[b * fi..(b + 1) * fi].iter().enumerate() {
                    if xi != 0.0 {
                        axpy(xi, &weights[i * fo..(i + 1) * fo], row);
                    }
                }
                for v in row.iter_mut() {
                    *v = act.apply(*v);
                }
            }
            acts.push(y);
        }
        Ok(Tape { batch, acts })
    }

    /// Reverse pass. Given `∂L/∂output`, accumulates `∂L/∂params` into
    /// `param_grads` (when given) and returns `∂L/∂input`.
    pub fn backward(&self, tape: &Tape, grad_out: &[f64], mut param_grads: Option<&mut [f64]>) -> Result<Vec<f64>> {
        let batch = tape.batch;
        if grad_out.len() != batch * self.spec.output() {
            return Err(Error::mismatch(
                "output gradient length",
                batch * self.spec.output(),
                grad_out.len(),
            ));
        }
        if let Some(g) = param_grads.as_deref() {
            if g.len() != self.params.len() {
                return Err(Error::mismatch("gradient buffer length", self.params.len(), g.len()));
            }
        }
        let p = &self.params.values;
        let offsets = self.spec.offsets();
        let mut delta = grad_out.to_vec();
        for k in (0..self.spec.layers()).rev() {
            let (fi, fo) = (self.spec.widths[k], self.spec.widths[k + 1]);
            let act = self.spec.activations[k];
            let out = &tape.acts[k + 1];
            for (d, &a) in delta.iter_mut().zip(out) {
                *d *= act.derivative_from_output(a);
            }
            let x = &tape.acts[k];
            let off = offsets[k];
            if let Some(g) = param_grads.as_deref_mut() {
                let (gw, gb) = g[off..off + fi * fo + fo].split_at_mut(fi * fo);
                for b in 0..batch {
                    let dz = &delta[b * fo..(b + 1) * fo];
                    axpy(1.0, dz, gb);
                    for (i, &xi) in x[b * fi..(b + 1) * fi].iter().enumerate() {
                        if xi != 0.0 {
                            axpy(xi, dz, &mut gw[i * fo..(i + 1) * fo]);
                        }
                    }
                }
            }
            let weights = &p[off..off + fi * fo];
            let mut dx = vec![0.0; batch * fi];
            for b in 0..batch {
                let dz = &delta[b * fo..(b + 1) * fo];
                for i in 0..fi {
                    dx[b * fi + i] = dot(&weights[i * fo..(i + 1) * fo], dz);
                }
            }
            delta = dx;
        }
        Ok(delta)
    }

    /// Reverse pass accumulating into this network's own gradient buffer.
    pub fn backward_accumulate(&mut self, tape: &Tape, grad_out: &[f64]) -> Result<Vec<f64>> {
        let mut grads = core::mem::take(&mut self.params.grads);
        let res = self.backward(tape, grad_out, Some(&mut grads));
        self.params.grads = grads;
        res
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam step.
pub fn adam_update(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) {
    debug_assert_eq!(params.len(), grads.len());
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - math::powf(cfg.beta1, t);
    let bc2 = 1.0 - math::powf(cfg.beta2, t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (math::sqrt(v_hat) + cfg.eps);
    }
}

/// `target ← ε·main + (1 − ε)·target`, written as a step of size `ε` toward
/// `main` so identical entries stay bitwise unchanged.
pub fn soft_update(target: &mut [f64], main: &[f64], eps: f64) {
    debug_assert_eq!(target.len(), main.len());
    for (t, &m) in target.iter_mut().zip(main) {
        *t += eps * (m - *t);
    }
}

/// Rescales `grads` to global L2 norm at most `max_norm`; returns the norm
/// before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = math::sqrt(grads.iter().map(|g| g * g).sum());
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Sinusoidal embedding of a step index: `dim/2` sines followed by `dim/2`
/// cosines at geometrically spaced frequencies `10000^{−k/(dim/2−1)}`.
pub fn step_embedding(step: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let scale = if half > 1 {
        math::ln(10000.0) / (half - 1) as f64
    } else {
        0.0
    };
    let mut out = vec![0.0; dim];
    for k in 0..half {
        let arg = step as f64 * math::exp(-scale * k as f64);
        out[k] = math::sin(arg);
        out[half + k] = math::cos(arg);
    }
    out
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::random::{normal, rng_for};

    fn tiny(rng: &mut Rng, out_act: Activation) -> Mlp {
        Mlp::init(MlpSpec::new(3, &[5, 4], 2, Activation::Tanh, out_act), rng, false).unwrap()
    }

    /// Plain nested loops over the documented parameter layout.
    fn oracle_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut off = 0;
        for (k, w) in net.spec.widths.windows(2).enumerate() {
            let (fi, fo) = (w[0], w[1]);
            let mut next = vec![0.0; fo];
            for o in 0..fo {
                let mut z = net.params.values[off + fi * fo + o];
                for i in 0..fi {
                    z += net.params.values[off + i * fo + o] * cur[i];
                }
                next[o] = match net.spec.activations[k] {
                    Activation::Identity => z,
                    Activation::Relu => z.max(0.0),
                    Activation::Tanh => z.tanh(),
                };
            }
            off += fi * fo + fo;
            cur = next;
        }
        cur
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = MlpSpec::new(3, &[4], 2, Activation::Relu, Activation::Identity);
        let net = Mlp::from_values(spec.clone(), vec![0.0; spec.param_count()]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0], 1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layers_pass_input_through() {
        let spec = MlpSpec::new(2, &[2], 2, Activation::Identity, Activation::Identity);
        // W = I, b = 0 for both layers.
        let layer = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let values = [layer, layer].concat();
        let net = Mlp::from_values(spec, values).unwrap();
        assert_eq!(
            net.forward(&[0.25, -4.0, 1.5, 2.0], 2).unwrap(),
            vec![0.25, -4.0, 1.5, 2.0]
        );
    }

    #[test]
    fn forward_matches_scalar_oracle() {
        let mut rng = rng_for(1, 0);
        let net = tiny(&mut rng, Activation::Identity);
        let x: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
        let y = net.forward(&x, 2).unwrap();
        for b in 0..2 {
            let o = oracle_forward(&net, &x[b * 3..b * 3 + 3]);
            for k in 0..2 {
                assert!((y[b * 2 + k] - o[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_for(2, 0);
        for act in [Activation::Identity, Activation::Tanh] {
            let mut net = tiny(&mut rng, act);
            let batch = 3;
            let x: Vec<f64> = (0..batch * 3).map(|_| normal(&mut rng)).collect();
            let c: Vec<f64> = (0..batch * 2).map(|_| normal(&mut rng)).collect();
            // L = Σ c ⊙ y + ½ Σ y²
            let loss = |n: &Mlp, x: &[f64]| -> f64 {
                let y = n.forward(x, batch).unwrap();
                y.iter().zip(&c).map(|(y, c)| c * y + 0.5 * y * y).sum()
            };
            let tape = net.forward_tape(&x, batch).unwrap();
            let dy: Vec<f64> = tape.output().iter().zip(&c).map(|(y, c)| c + y).collect();
            net.params.zero_grad();
            let dx = net.backward_accumulate(&tape, &dy).unwrap();
            let h = 1e-5;
            for i in 0..net.params.len() {
                let mut plus = net.clone();
                plus.params.values[i] += h;
                let mut minus = net.clone();
                minus.params.values[i] -= h;
                let fd = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
                let g = net.params.grads[i];
                assert!(
                    (fd - g).abs() <= 1e-4 * fd.abs().max(g.abs()).max(1e-6),
                    "param {i}: {fd} vs {g}"
                );
            }
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let fd = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
                assert!((fd - dx[i]).abs() <= 1e-4 * fd.abs().max(1e-6));
            }
        }
    }

    #[test]
    fn constant_loss_zero_gradient() {
        let mut rng = rng_for(3, 0);
        let mut net = tiny(&mut rng, Activation::Identity);
        let tape = net.forward_tape(&[0.1, 0.2, 0.3], 1).unwrap();
        net.params.zero_grad();
        net.backward_accumulate(&tape, &[0.0, 0.0]).unwrap();
        assert!(net.params.grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn adam_examples() {
        let cfg = AdamConfig::with_lr(5e-4);
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(2);
        adam_update(&mut p, &[0.0, 0.0], &mut st, &cfg);
        assert_eq!(p, vec![1.0, -2.0]);

        let mut p = vec![1.0, -2.0, 0.5];
        let g = [0.3, -4.0, 1e-3];
        let mut st = AdamState::new(3);
        adam_update(&mut p, &g, &mut st, &cfg);
        // First step: m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + eps).
        let expect = [
            1.0 - 5e-4 * 0.3 / (0.3 + 1e-8),
            -2.0 + 5e-4 * 4.0 / (4.0 + 1e-8),
            0.5 - 5e-4 * 1e-3 / (1e-3 + 1e-8),
        ];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }

        let mut p1 = vec![0.3, 0.4];
        let mut p2 = p1.clone();
        let mut s1 = AdamState::new(2);
        let mut s2 = s1.clone();
        adam_update(&mut p1, &[0.1, -0.2], &mut s1, &cfg);
        adam_update(&mut p2, &[0.1, -0.2], &mut s2, &cfg);
        assert_eq!(p1, p2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn soft_update_examples() {
        let main = [1.0, 2.0];
        let mut t = [0.0, 5.0];
        soft_update(&mut t, &main, 1.0);
        assert_eq!(t, main);
        let mut t = [0.0, 5.0];
        soft_update(&mut t, &main, 0.0);
        assert_eq!(t, [0.0, 5.0]);
        let mut t = [0.0];
        soft_update(&mut t, &[1.0], 0.005);
        assert!((t[0] - 0.005).abs() < 1e-18);
    }

    #[test]
    fn clip_examples() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut g = [0.1, 0.1];
        clip_grad_norm(&mut g, 1.0);
        assert_eq!(g, [0.1, 0.1]);
    }

    #[test]
    fn embedding_shape() {
        let e = step_embedding(0, 16);
        assert_eq!(e.len(), 16);
        assert!(e[..8].iter().all(|&v| v == 0.0));
        assert!(e[8..].iter().all(|&v| v == 1.0));
        let e3 = step_embedding(3, 16);
        assert!((e3[0] - 3f64.sin()).abs() < 1e-15);
        assert_ne!(step_embedding(1, 16), step_embedding(2, 16));
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec {
            widths: vec![2, 3],
            activations: vec![Activation::Relu]
        }
        .validate()
        .is_err());
        assert!(MlpSpec::new(2, &[3], 1, Activation::Relu, Activation::Identity)
            .validate()
            .is_ok());
        assert_eq!(
            MlpSpec::new(2, &[3], 1, Activation::Relu, Activation::Identity).param_count(),
            2 * 3 + 3 + 3 + 1
        );
    }
}
