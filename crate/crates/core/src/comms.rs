//! Communication metrics: beamformer power, SINR, rates and their sums.

use alloc::vec::Vec;

use crate::linalg::{CMatrix, CVector};
use crate::math;
use crate::{Error, Result};

/// Active beamformer, `M × N`; column `n` serves user `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(pub CMatrix);

impl Beamformer {
    pub fn antennas(&self) -> usize {
        self.0.rows()
    }

    pub fn users(&self) -> usize {
        self.0.cols()
    }

    /// Total transmit power `Σ_n ‖ω_n‖²`.
    pub fn power(&self) -> f64 {
        self.0.norm_sqr()
    }

    /// Projects onto the power budget by uniform scaling when it is exceeded.
    pub fn project(&mut self, p_max: f64) {
        let p = self.power();
        if p > p_max {
            self.0 = self.0.scale(math::sqrt(p_max / p));
        }
    }

    pub fn column(&self, n: usize) -> CVector {
        self.0.column(n)
    }
}

/// SINR of user `n` given its composite row channel.
pub fn sinr(composite: &CVector, w: &Beamformer, n: usize, sigma2: f64) -> Result<f64> {
    if composite.len() != w.antennas() {
        return Err(Error::mismatch(
            "composite channel length",
            w.antennas(),
            composite.len(),
        ));
    }
    if n >= w.users() {
        return Err(Error::mismatch("user index bound", w.users(), n));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::OutOfRange("noise power must be positive".into()));
    }
    let mut signal = 0.0;
    let mut interference = 0.0;
    for i in 0..w.users() {
        let g = composite.dot(&w.column(i))?.norm_sqr();
        if i == n {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / (interference + sigma2))
}

pub fn user_rate(sinr: f64) -> f64 {
    math::log2(1.0 + sinr)
}

/// Rates of all users in one slot.
pub fn slot_rates(composites: &[CVector], w: &Beamformer, sigma2: f64) -> Result<Vec<f64>> {
    if composites.len() != w.users() {
        return Err(Error::mismatch("user count", w.users(), composites.len()));
    }
    composites
        .iter()
        .enumerate()
        .map(|(n, h)| sinr(h, w, n, sigma2).map(user_rate))
        .collect()
}

/// Per-slot sum rate `R^U[t] = Σ_n R_n[t]`.
pub fn slot_sum_rate(rates: &[f64]) -> f64 {
    rates.iter().sum()
}

/// Objective f1: rates summed over users and slots. `rates[t][n]`.
pub fn sum_rate<R: AsRef<[f64]>>(rates: &[R]) -> f64 {
    rates.iter().map(|r| slot_sum_rate(r.as_ref())).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;
    use crate::random::{complex_normal, rng_for};
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sinr_signal_equals_noise() {
        let sigma2 = 1e-12;
        let w = Beamformer(CMatrix::from_fn(1, 1, |_, _| c(1e-6, 0.0)));
        let h = CVector(vec![c(1.0, 0.0)]);
        assert!((sinr(&h, &w, 0, sigma2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_zero_beam() {
        let w = Beamformer(CMatrix::zeros(2, 2));
        let h = CVector(vec![c(1.0, 0.5), c(0.2, -1.0)]);
        assert_eq!(sinr(&h, &w, 0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn sinr_two_users_scalar_oracle() {
        let mut rng = rng_for(11, 0);
        let h = CVector((0..3).map(|_| complex_normal(&mut rng)).collect());
        let w = Beamformer(CMatrix::from_fn(3, 2, |_, _| complex_normal(&mut rng)));
        let sigma2 = 0.3;
        // Scalar re/im arithmetic, no complex type.
        let gain = |col: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for m in 0..3 {
                let (a, b) = (h[m].re, h[m].im);
                let (x, y) = (w.0[(m, col)].re, w.0[(m, col)].im);
                re += a * x - b * y;
                im += a * y + b * x;
            }
            re * re + im * im
        };
        let expect0 = gain(0) / (gain(1) + sigma2);
        let expect1 = gain(1) / (gain(0) + sigma2);
        assert!((sinr(&h, &w, 0, sigma2).unwrap() - expect0).abs() < 1e-12 * expect0.max(1.0));
        assert!((sinr(&h, &w, 1, sigma2).unwrap() - expect1).abs() < 1e-12 * expect1.max(1.0));
    }

    #[test]
    fn sinr_errors() {
        let w = Beamformer(CMatrix::zeros(2, 1));
        assert!(sinr(&CVector::zeros(3), &w, 0, 1.0).is_err());
        assert!(sinr(&CVector::zeros(2), &w, 0, 0.0).is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(user_rate(0.0), 0.0);
        assert_eq!(user_rate(1.0), 1.0);
        assert_eq!(user_rate(3.0), 2.0);
        let none: [[f64; 0]; 0] = [];
        assert_eq!(sum_rate(&none), 0.0);
        assert_eq!(sum_rate(&[[0.0, 0.0]]), 0.0);
        assert_eq!(sum_rate(&[[2.0]]), 2.0);
        assert_eq!(sum_rate(&[[1.0; 3], [1.0; 3]]), 6.0);
    }

    #[test]
    fn projection_hits_budget() {
        let mut w = Beamformer(CMatrix::from_fn(2, 2, |_, _| c(1.0, 1.0)));
        assert_eq!(w.power(), 8.0);
        w.project(2.0);
        assert!((w.power() - 2.0).abs() < 1e-12);
        w.project(5.0);
        assert!((w.power() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_monotone_in_signal_power() {
        let h = CVector(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let mut last = -1.0;
        for k in 0..20 {
            let s = 0.1 * k as f64;
            let w = Beamformer(CMatrix::from_fn(2, 2, |m, n| {
                if n == 0 {
                    c(s, 0.0)
                } else if m == 0 {
                    c(0.3, 0.1)
                } else {
                    c(-0.2, 0.0)
                }
            }));
            let r = user_rate(sinr(&h, &w, 0, 1e-2).unwrap());
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn interference_limited_scale_invariance() {
        let mut rng = rng_for(5, 0);
        let h = CVector((0..2).map(|_| complex_normal(&mut rng)).collect());
        let w = Beamformer(CMatrix::from_fn(2, 2, |_, _| complex_normal(&mut rng)));
        let base = sinr(&h, &w, 0, 1e-20).unwrap();
        let scaled = sinr(&h, &Beamformer(w.0.scale(7.5)), 0, 1e-20).unwrap();
        assert!(((base - scaled) / base).abs() < 1e-6);
    }
}
