//! Physical constants and material defaults.
//!
//! Every derivation takes a [`PhysicalConstants`] by reference; nothing else in
//! the crate defines its own copy of ħ, μ_B and friends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton (J/T), CODATA 2018.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Boltzmann constant (J/K), exact SI.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permeability (T·m/A), CODATA 2018.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// ⁸⁷Rb mass (kg).
pub const RB87_MASS: f64 = 1.443e-25;
/// ⁸⁷Rb s-wave scattering length (m).
pub const RB87_SCATTERING_LENGTH: f64 = 5.3e-9;
/// Landé factor of the F = 1 ground-state manifold of ⁸⁷Rb.
pub const RB87_G_F1: f64 = -0.5;

/// Silicon Young's modulus (Pa), ⟨110⟩ direction.
pub const SILICON_YOUNGS_MODULUS: f64 = 169e9;
/// Silicon mass density (kg/m³).
pub const SILICON_DENSITY: f64 = 2330.0;
/// Cobalt saturation magnetization (A/m).
pub const COBALT_MAGNETIZATION: f64 = 1.4e6;
/// Cobalt mass density (kg/m³).
pub const COBALT_DENSITY: f64 = 8900.0;

/// The constant set threaded through every derivation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mu_b: f64,
    pub k_b: f64,
    pub mu_0: f64,
    pub atom_mass: f64,
    pub scattering_length: f64,
    /// Signed Landé factor.
    pub g_f: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            mu_b: BOHR_MAGNETON,
            k_b: BOLTZMANN,
            mu_0: MU_0,
            atom_mass: RB87_MASS,
            scattering_length: RB87_SCATTERING_LENGTH,
            g_f: RB87_G_F1,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hbar", self.hbar),
            ("mu_b", self.mu_b),
            ("k_b", self.k_b),
            ("mu_0", self.mu_0),
            ("atom_mass", self.atom_mass),
            ("scattering_length", self.scattering_length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("constants.{name}"), "must be finite and > 0"));
            }
        }
        if !self.g_f.is_finite() || self.g_f == 0.0 {
            return Err(Error::invalid("constants.g_f", "must be finite and nonzero"));
        }
        Ok(())
    }

    /// Planck constant h = 2πħ.
    pub fn h(&self) -> f64 {
        std::f64::consts::TAU * self.hbar
    }
}

/// Angular frequency (rad/s) from an ordinary frequency in Hz.
#[inline]
pub fn angular(hz: f64) -> f64 {
    std::f64::consts::TAU * hz
}

/// Ordinary frequency in Hz from an angular frequency in rad/s.
#[inline]
pub fn hertz(rad_per_s: f64) -> f64 {
    rad_per_s / std::f64::consts::TAU
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        PhysicalConstants::default().validate().unwrap();
        assert!(PhysicalConstants::default().g_f < 0.0);
    }

    #[test]
    fn rejects_nonpositive() {
        let c = PhysicalConstants { hbar: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = PhysicalConstants { g_f: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn hz_round_trip(f in 1e-3f64..1e9) {
            let back = hertz(angular(f));
            prop_assert!((back - f).abs() <= 4.0 * f64::EPSILON * f);
        }
    }
}
