//! Channel realizations for one time slot: the Rician BS→user direct links,
//! the LoS BS→IRS and IRS→user links, the IRS phase matrix, and the composite
//! BS→user channel.

use alloc::vec::Vec;

use crate::geometry::{self, link_angles, Position};
use crate::linalg::{phasor, CMatrix, CVector};
use crate::math::{self, TAU};
use crate::random::{complex_normal, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelParams {
    /// Linear power gain at the 1 m reference distance.
    pub l0: f64,
    pub alpha_bu: f64,
    pub alpha_br: f64,
    pub alpha_ru: f64,
    /// Rician factor of the direct links.
    pub rician_eta: f64,
    /// IRS element spacing in wavelengths.
    pub d_r_over_lambda: f64,
    /// BS antenna spacing in wavelengths.
    pub d_s_over_lambda: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            l0: 1e-3,
            alpha_bu: 4.6,
            alpha_br: 2.2,
            alpha_ru: 2.2,
            rician_eta: 1.0,
            d_r_over_lambda: 0.5,
            d_s_over_lambda: 0.5,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let exponent_ok = |a: f64| (1.5..=7.0).contains(&a);
        if !(self.l0 > 0.0) {
            return Err(Error::InvalidConfig("l0 must be positive".into()));
        }
        if !(exponent_ok(self.alpha_bu) && exponent_ok(self.alpha_br) && exponent_ok(self.alpha_ru)) {
            return Err(Error::InvalidConfig("path-loss exponents must lie in [1.5, 7]".into()));
        }
        if !(self.rician_eta >= 0.0) {
            return Err(Error::InvalidConfig("rician_eta must be non-negative".into()));
        }
        if !(self.d_r_over_lambda > 0.0 && self.d_s_over_lambda > 0.0) {
            return Err(Error::InvalidConfig("element spacings must be positive".into()));
        }
        Ok(())
    }
}

/// Amplitude path gain `√(L0 / d^α)`.
pub fn path_amplitude(l0: f64, d: f64, alpha: f64) -> f64 {
    math::sqrt(l0 / math::powf(d, alpha))
}

/// Uniform linear array response `[1, e^{−jkψ}, …, e^{−jk(n−1)ψ}]` with
/// `k = 2π·spacing/λ`.
pub fn array_response(n: usize, spacing_over_lambda: f64, direction: f64) -> CVector {
    let step = -TAU * spacing_over_lambda * direction;
    CVector((0..n).map(|i| phasor(step * i as f64)).collect())
}

/// Rician BS→user channel, length `m`.
pub fn direct_channel(
    params: &ChannelParams,
    m: usize,
    q_b: Position,
    q_u: Position,
    rng: &mut Rng,
) -> Result<CVector> {
    let angles = link_angles(q_b, q_u)?;
    let d = geometry::distance(q_b, q_u);
    let scale = path_amplitude(params.l0, d, params.alpha_bu);
    let eta = params.rician_eta;
    let los_w = math::sqrt(eta / (eta + 1.0));
    let nlos_w = math::sqrt(1.0 / (eta + 1.0));
    let los = array_response(m, params.d_s_over_lambda, angles.sin_iota);
    Ok(CVector(
        los.iter()
            .map(|&g| scale * (los_w * g + nlos_w * complex_normal(rng)))
            .collect(),
    ))
}

/// LoS BS→IRS channel, `l × m`: the conjugated IRS response (column) times the
/// BS response (row), scaled by the path amplitude.
pub fn bs_irs_channel(params: &ChannelParams, l: usize, m: usize, q_b: Position, q_r: Position) -> Result<CMatrix> {
    let angles = link_angles(q_b, q_r)?;
    let d = geometry::distance(q_b, q_r);
    let scale = path_amplitude(params.l0, d, params.alpha_br);
    let irs = array_response(l, params.d_r_over_lambda, angles.cos_zeta);
    let bs = array_response(m, params.d_s_over_lambda, angles.sin_iota);
    Ok(CMatrix::from_fn(l, m, |r, c| irs[r].conj() * bs[c] * scale))
}

/// LoS IRS→user channel, length `l`.
pub fn irs_user_channel(params: &ChannelParams, l: usize, q_r: Position, q_u: Position) -> Result<CVector> {
    let angles = link_angles(q_r, q_u)?;
    let d = geometry::distance(q_r, q_u);
    let scale = path_amplitude(params.l0, d, params.alpha_ru);
    Ok(array_response(l, params.d_r_over_lambda, angles.cos_zeta).scale(scale))
}

/// Diagonal IRS phase-shift matrix `diag(e^{jθ_1}, …, e^{jθ_L})`.
pub fn phase_matrix(theta: &[f64]) -> Result<CMatrix> {
    let mut phi = CMatrix::zeros(theta.len(), theta.len());
    for (l, &t) in theta.iter().enumerate() {
        if !(0.0..TAU).contains(&t) {
            return Err(Error::OutOfRange(alloc::format!("phase {t} outside [0, 2π)")));
        }
        phi[(l, l)] = phasor(t);
    }
    Ok(phi)
}

/// Composite BS→user row channel `h_buᴴ + h_ruᴴ Φ h_br`, length `m`.
pub fn composite_channel(h_bu: &CVector, h_ru: &CVector, phi: &CMatrix, h_br: &CMatrix) -> Result<CVector> {
    let (l, m) = (h_br.rows(), h_br.cols());
    if h_bu.len() != m {
        return Err(Error::mismatch("direct channel length", m, h_bu.len()));
    }
    if h_ru.len() != l {
        return Err(Error::mismatch("IRS-user channel length", l, h_ru.len()));
    }
    if phi.rows() != l || phi.cols() != l {
        return Err(Error::mismatch("phase matrix size", l, phi.rows()));
    }
    let reflected = phi.left_mul_vec(&h_ru.conj())?;
    let reflected = h_br.left_mul_vec(&reflected)?;
    h_bu.conj().add(&reflected)
}

/// All channels of one slot.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_bu: Vec<CVector>,
    pub h_br: CMatrix,
    pub h_ru: Vec<CVector>,
    /// Composite row channel per user; filled once the phases are known.
    pub composite: Vec<CVector>,
}

impl ChannelRealization {
    /// Draws direct links and computes the LoS links for the given geometry.
    /// `composite` stays empty until [`ChannelRealization::compose`] is called.
    pub fn draw(
        params: &ChannelParams,
        m: usize,
        l: usize,
        bs: Position,
        irs: Position,
        users: &[Position],
        rng: &mut Rng,
    ) -> Result<Self> {
        let h_bu = users
            .iter()
            .map(|&u| direct_channel(params, m, bs, u, rng))
            .collect::<Result<Vec<_>>>()?;
        let h_br = bs_irs_channel(params, l, m, bs, irs)?;
        let h_ru = users
            .iter()
            .map(|&u| irs_user_channel(params, l, irs, u))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelRealization {
            h_bu,
            h_br,
            h_ru,
            composite: Vec::new(),
        })
    }

    pub fn compose(&mut self, phi: &CMatrix) -> Result<()> {
        self.composite = self
            .h_bu
            .iter()
            .zip(&self.h_ru)
            .map(|(bu, ru)| composite_channel(bu, ru, phi, &self.h_br))
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }
}

/// Wraps an arbitrary angle into `[0, 2π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta - TAU * math::floor(theta / TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}
