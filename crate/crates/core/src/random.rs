//! Seeded random streams.
//!
//! Every consumer of randomness owns its own ChaCha stream derived from a run
//! seed and a fixed stream id, so adding draws in one place never perturbs
//! another.

use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};

pub type Rng = rand_chacha::ChaCha8Rng;

/// Stream ids used across the crate.
pub mod stream {
    pub const LAYOUT: u64 = 1;
    pub const ENV: u64 = 2;
    pub const INIT: u64 = 3;
    pub const ACTOR: u64 = 4;
    pub const EXPLORE: u64 = 5;
    pub const REPLAY: u64 = 6;
    pub const EVAL: u64 = 7;
    pub const EVAL_ENV: u64 = 8;
}

pub fn rng_for(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw (Box–Muller through `libm`). Sampling here rather
/// than through `rand_distr` keeps draws identical whether or not some other
/// crate in the build turns on `num-traits/std`.
#[inline]
pub fn normal(rng: &mut Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// Circularly-symmetric complex normal with unit total variance.
#[inline]
pub fn complex_normal(rng: &mut Rng) -> Complex64 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * normal(rng), s * normal(rng))
}

#[inline]
pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn fill_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out {
        *v = normal(rng);
    }
}
