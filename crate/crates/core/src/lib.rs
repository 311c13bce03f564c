//! Simulation and design tools for ultracold atoms magnetically coupled to a
//! nanomechanical cantilever.
//!
//! - [`params`] turns device geometry into coupled-system parameters.
//! - [`outcoupling`] simulates atom loss driven by the thermal cantilever motion.
//! - [`tcdyn`] evolves the dissipative Tavis-Cummings model.
//! - [`optimize`] searches device space for the strong-coupling figures of merit.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod integrate;
pub mod optimize;
pub mod outcoupling;
pub mod params;
pub mod sparse;
pub mod tcdyn;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
