//! Sensing metrics: IRS steering vector toward the target, the expected
//! beampattern gain at the target and the resulting sensing rate.

use crate::comms::Beamformer;
use crate::linalg::{phasor, CMatrix, CVector, Complex64};
use crate::math::{self, TAU};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensingParams {
    /// Path-loss exponent of the IRS→target hop.
    pub alpha_r_model: f64,
}

impl Default for SensingParams {
    fn default() -> Self {
        SensingParams { alpha_r_model: 2.2 }
    }
}

/// Large-scale fading amplitude of the IRS→target hop.
pub fn fading_coefficient(l0: f64, distance: f64, params: &SensingParams) -> f64 {
    math::sqrt(l0 / math::powf(distance, params.alpha_r_model))
}

/// `a_l = e^{j·2π·d_r/λ·(l−1)·sin ϑ}` for `l = 1..L`.
pub fn steering_vector(l: usize, sin_theta: f64, d_r_over_lambda: f64) -> CVector {
    let step = TAU * d_r_over_lambda * sin_theta;
    CVector((0..l).map(|i| phasor(step * i as f64)).collect())
}

/// Effective BS→target row channel `gᴴ = α_r · aᴴ Φ h_br`, length `M`.
pub fn target_channel(a: &CVector, phi: &CMatrix, h_br: &CMatrix, alpha_r: f64) -> Result<CVector> {
    let l = h_br.rows();
    if a.len() != l {
        return Err(Error::mismatch("steering vector length", l, a.len()));
    }
    if phi.rows() != l || phi.cols() != l {
        return Err(Error::mismatch("phase matrix size", l, phi.rows()));
    }
    let row = phi.left_mul_vec(&a.conj())?;
    Ok(h_br.left_mul_vec(&row)?.scale(alpha_r))
}

/// Expected target gain `gᴴ (Σ_n ω_n ω_nᴴ) g`, evaluated through the transmit
/// covariance.
pub fn target_gain(a: &CVector, phi: &CMatrix, h_br: &CMatrix, w: &Beamformer, alpha_r: f64) -> Result<f64> {
    let g_h = target_channel(a, phi, h_br, alpha_r)?;
    covariance_gain(&g_h, w)
}

/// `gᴴ R g` with `R = W Wᴴ`.
pub fn covariance_gain(g_h: &CVector, w: &Beamformer) -> Result<f64> {
    let m = w.antennas();
    if g_h.len() != m {
        return Err(Error::mismatch("target channel length", m, g_h.len()));
    }
    let cov = CMatrix::from_fn(m, m, |i, j| {
        (0..w.users())
            .map(|n| w.0[(i, n)] * w.0[(j, n)].conj())
            .sum::<Complex64>()
    });
    let g = g_h.conj();
    let quad = cov.left_mul_vec(g_h)?.dot(&g)?;
    let slack = 1e-9 * quad.re.abs() + 1e-15;
    debug_assert!(quad.im.abs() < slack, "quadratic form has imaginary part {}", quad.im);
    if quad.im.abs() >= slack {
        return Err(Error::OutOfRange(alloc::format!("Hermitian form is not real: {quad}")));
    }
    Ok(quad.re.max(0.0))
}

/// Same gain as `‖Wᴴ g‖² = Σ_n |gᴴ ω_n|²`.
pub fn target_gain_per_stream(g_h: &CVector, w: &Beamformer) -> Result<f64> {
    if g_h.len() != w.antennas() {
        return Err(Error::mismatch("target channel length", w.antennas(), g_h.len()));
    }
    (0..w.users())
        .map(|n| g_h.dot(&w.column(n)).map(|z| z.norm_sqr()))
        .sum()
}

pub fn sensing_rate(gain: f64, sigma2: f64) -> f64 {
    math::log2(1.0 + gain / sigma2)
}
