//! Simulator and training stack for a UAV-mounted intelligent reflecting surface
//! (IRS) serving an integrated sensing and communication (ISAC) base station.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * the physical layer: geometry, Rician/LoS channels, SINR and sensing gain,
//!   rotary-wing propulsion energy ([`geometry`], [`channel`], [`comms`],
//!   [`sensing`], [`uav`]);
//! * the episodic decision process built on top of it ([`env`]);
//! * a small reverse-mode network toolkit, a diffusion actor, a recency- and
//!   priority-weighted replay buffer and the actor-critic trainers
//!   ([`nn`], [`diffusion`], [`replay`], [`agents`]).
//!
//! File formats, configuration loading and the command line live in the
//! companion `isac-lab` crate.
#![no_std]
// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod channel;
pub mod comms;
pub mod diffusion;
pub mod env;
mod error;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod nn;
pub mod random;
pub mod replay;
pub mod sensing;
pub mod uav;

pub use error::{Error, Result};
