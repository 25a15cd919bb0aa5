//! Positions, distances and the link-angle convention used by every channel.
//!
//! Angle convention: for a link `from → to` with length `d`,
//! `cos ζ = (to.z − from.z) / d` (zenith-referenced) and
//! `sin ι = (to.y − from.y) / max(horizontal distance, ε)`.
//! The sensing angle seen from the IRS looking down at the target is
//! `sin ϑ = (from.z − to.z) / d`.

use crate::math;
use crate::{Error, Result};

/// Guards the horizontal-distance division for purely vertical links.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    pub cos_zeta: f64,
    pub sin_iota: f64,
}

pub fn distance(p: Position, q: Position) -> f64 {
    let (dx, dy, dz) = (q.x - p.x, q.y - p.y, q.z - p.z);
    math::sqrt(dx * dx + dy * dy + dz * dz)
}

pub fn horizontal_distance(p: Position, q: Position) -> f64 {
    math::hypot(q.x - p.x, q.y - p.y)
}

pub fn link_angles(from: Position, to: Position) -> Result<LinkAngles> {
    let d = distance(from, to);
    if d <= 0.0 {
        return Err(Error::DegenerateLink);
    }
    let horizontal = horizontal_distance(from, to).max(EPS_GEO);
    Ok(LinkAngles {
        cos_zeta: ((to.z - from.z) / d).clamp(-1.0, 1.0),
        sin_iota: ((to.y - from.y) / horizontal).clamp(-1.0, 1.0),
    })
}

/// `sin ϑ` of the sensing link from an elevated IRS to a ground target.
pub fn sensing_sin_angle(irs: Position, target: Position) -> Result<f64> {
    let d = distance(irs, target);
    if d <= 0.0 {
        return Err(Error::DegenerateLink);
    }
    Ok(((irs.z - target.z) / d).clamp(-1.0, 1.0))
}
