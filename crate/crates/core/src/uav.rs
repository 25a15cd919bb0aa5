//! Fixed-altitude UAV kinematics and rotary-wing propulsion energy.

use crate::geometry::Position;
use crate::math;
use crate::{Error, Result};

/// Rotary-wing propulsion model parameters.
///
/// The defaults use the usual rotorcraft constants: blade profile power
/// 79.85 W, induced hover power 88.63 W, tip speed 120 m/s, mean induced
/// velocity 4.03 m/s, fuselage drag ratio 0.6, air density 1.225 kg/m³,
/// rotor solidity 0.05 and disc area 0.503 m².
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyParams {
    /// Blade profile power in hover, W.
    pub p_a: f64,
    /// Induced power in hover, W.
    pub p_b: f64,
    /// Rotor blade tip speed, m/s.
    pub v_tip: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub v_a: f64,
    /// Fuselage drag ratio.
    pub d_a: f64,
    /// Air density, kg/m³.
    pub rho: f64,
    /// Rotor solidity.
    pub s: f64,
    /// Rotor disc area, m².
    pub area: f64,
    /// Slot length, s.
    pub t_d: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            p_a: 79.85,
            p_b: 88.63,
            v_tip: 120.0,
            v_a: 4.03,
            d_a: 0.6,
            rho: 1.225,
            s: 0.05,
            area: 0.503,
            t_d: 1.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p_a, self.p_b, self.v_tip, self.v_a, self.d_a, self.rho, self.s, self.area, self.t_d,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("energy parameters must be positive".into()))
        }
    }
}

/// Moves the UAV horizontally for one slot; altitude is unchanged.
pub fn step_position(q: Position, speed: f64, yaw: f64, t_d: f64) -> Position {
    Position {
        x: q.x + speed * t_d * math::cos(yaw),
        y: q.y + speed * t_d * math::sin(yaw),
        z: q.z,
    }
}

/// `√(1 + v⁴/(4v_a⁴)) − v²/(2v_a²)`, evaluated without cancellation.
pub fn induced_radicand(speed: f64, v_a: f64) -> f64 {
    let x = speed * speed / (2.0 * v_a * v_a);
    1.0 / (math::sqrt(1.0 + x * x) + x)
}

/// Propulsion energy spent in one slot at constant `speed`, in joules.
pub fn propulsion_energy(speed: f64, p: &EnergyParams) -> Result<f64> {
    if !(speed >= 0.0) {
        return Err(Error::OutOfRange(alloc::format!("negative speed {speed}")));
    }
    let v2 = speed * speed;
    let blade = p.p_a * (1.0 + 3.0 * v2 / (p.v_tip * p.v_tip));
    let radicand = induced_radicand(speed, p.v_a);
    debug_assert!(radicand > 0.0);
    let induced = p.p_b * math::sqrt(radicand);
    let parasite = 0.5 * p.d_a * p.rho * p.s * p.area * v2 * speed;
    Ok((blade + induced + parasite) * p.t_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal term-by-term evaluation kept independent of the library path.
    fn oracle(v: f64) -> f64 {
        let (pa, pb, vtip, va, d0, rho, s, a) = (79.85, 88.63, 120.0, 4.03f64, 0.6, 1.225, 0.05, 0.503);
        let blade = pa * (1.0 + 3.0 * v * v / (vtip * vtip));
        let inner = (1.0 + v.powi(4) / (4.0 * va.powi(4))).sqrt() - v * v / (2.0 * va * va);
        let induced = pb * inner.sqrt();
        blade + induced + 0.5 * d0 * rho * s * a * v.powi(3)
    }

    #[test]
    fn step_examples() {
        let q = Position::new(100.0, 100.0, 40.0);
        assert_eq!(step_position(q, 0.0, 1.3, 1.0), q);
        let n = step_position(q, 10.0, core::f64::consts::FRAC_PI_2, 1.0);
        assert!((n.x - 100.0).abs() < 1e-12 && (n.y - 110.0).abs() < 1e-12 && n.z == 40.0);
        let e = step_position(q, 30.0, 0.0, 1.0);
        assert_eq!(e.x, 130.0);
    }

    #[test]
    fn hover_energy() {
        let e = propulsion_energy(0.0, &EnergyParams::default()).unwrap();
        assert!((e - 168.48).abs() < 1e-9 * 168.48);
    }

    #[test]
    fn cruise_energy_matches_oracle() {
        let p = EnergyParams::default();
        let e = propulsion_energy(10.0, &p).unwrap();
        let o = oracle(10.0);
        assert!((e - o).abs() < 1e-9 * o);
        assert!((e - 126.0).abs() < 0.1, "{e}");
    }

    #[test]
    fn parasite_dominates_at_high_speed() {
        let p = EnergyParams::default();
        let e30 = propulsion_energy(30.0, &p).unwrap();
        let e60 = propulsion_energy(60.0, &p).unwrap();
        let parasite60 = 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * 60f64.powi(3);
        assert!(parasite60 / e60 > 0.9);
        // Cubic growth is diluted by the blade-profile term: ratio ≈ 6.0.
        let ratio = e60 / e30;
        let oracle_ratio = oracle(60.0) / oracle(30.0);
        assert!((ratio - oracle_ratio).abs() < 1e-6 * oracle_ratio);
        assert!(ratio > 5.5 && ratio < 6.5, "{ratio}");
    }

    #[test]
    fn interior_minimum_below_hover() {
        let p = EnergyParams::default();
        let hover = propulsion_energy(0.0, &p).unwrap();
        let best = (1..300)
            .map(|k| propulsion_energy(k as f64 * 0.1, &p).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best < hover);
    }

    #[test]
    fn negative_speed_rejected() {
        assert!(propulsion_energy(-1.0, &EnergyParams::default()).is_err());
    }

    proptest! {
        #[test]
        fn radicand_positive(v in 0.0..1000.0f64) {
            prop_assert!(induced_radicand(v, 4.03) > 0.0);
        }
    }
}
