//! Device, trap and condensate specifications and the deterministic chain that
//! turns them into coupled-system parameters.
//!
//! All frequencies are angular (rad/s) and all rates are in 1/s. Conversion to
//! Hz happens only when reporting, through [`crate::constants::hertz`].

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Mode-shape prefactor of the fundamental flexural frequency of a clamped-free beam.
const FLEXURAL_PREFACTOR: f64 = 0.16;
/// Fraction of the beam mass participating in the fundamental mode.
const MODAL_MASS_FRACTION: f64 = 0.24;
/// Three-body loss coefficient for |1,−1⟩, in s^{7/5}.
const THREE_BODY_COEFFICIENT: f64 = 2.2e-12;

/// Geometry and material of the cantilever resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantileverSpec {
    /// m
    pub length: f64,
    /// m
    pub width: f64,
    /// m
    pub thickness: f64,
    /// Pa
    pub youngs_modulus: f64,
    /// kg/m³
    pub density: f64,
    pub quality_factor: f64,
    /// Mass carried at the tip (magnet plus paddle), kg.
    pub tip_mass: f64,
    /// Replaces the beam formula when set, rad/s. Used for frequencies that
    /// include the magnetic spring shift.
    pub frequency_override: Option<f64>,
}

impl CantileverSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("youngs_modulus", self.youngs_modulus),
            ("density", self.density),
        ] {
            positive(name, v)?;
        }
        if !(self.thickness <= self.width && self.width <= self.length) {
            return Err(Error::invalid("thickness/width/length", "require thickness <= width <= length"));
        }
        if !(self.quality_factor.is_finite() && self.quality_factor >= 1.0) {
            return Err(Error::invalid("quality_factor", "must be >= 1"));
        }
        if !(self.tip_mass.is_finite() && self.tip_mass >= 0.0) {
            return Err(Error::invalid("tip_mass", "must be >= 0"));
        }
        if let Some(f) = self.frequency_override {
            positive("frequency_override", f)?;
        }
        Ok(())
    }

    /// Mass of the beam that participates in the fundamental mode.
    pub fn modal_beam_mass(&self) -> f64 {
        MODAL_MASS_FRACTION * self.density * self.length * self.width * self.thickness
    }

    /// Ratio c of tip mass to modal beam mass.
    pub fn tip_mass_ratio(&self) -> f64 {
        self.tip_mass / self.modal_beam_mass()
    }
}

/// Single-domain coupling magnet on the cantilever tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetSpec {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    /// Saturation magnetization, A/m.
    pub magnetization: f64,
    /// Gap to the compensation magnets, m. Informational.
    pub gap: f64,
    /// Upper bound on the gradient imposed by trap distortion, T/m.
    pub gradient_cap: Option<f64>,
    /// Gradient supplied directly, bypassing the dipole model, T/m.
    pub gradient: Option<f64>,
}

impl MagnetSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("magnetization", self.magnetization),
        ] {
            positive(name, v)?;
        }
        if !(self.gap.is_finite() && self.gap >= 0.0) {
            return Err(Error::invalid("gap", "must be >= 0"));
        }
        if let Some(c) = self.gradient_cap {
            positive("gradient_cap", c)?;
        }
        if let Some(g) = self.gradient {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::invalid("gradient", "must be >= 0"));
            }
        }
        Ok(())
    }

    /// |μ_m| = M_s · volume, A·m².
    pub fn dipole_moment(&self) -> f64 {
        self.magnetization * self.length * self.width * self.thickness
    }

    pub fn volume(&self) -> f64 {
        self.length * self.width * self.thickness
    }
}

/// Harmonic trap holding the atoms above the cantilever tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    /// (ω_x, ω_y, ω_z), rad/s.
    pub omega: [f64; 3],
    /// Distance y_0 between the trap centre and the magnet, m.
    pub distance: f64,
    /// Static field B_0 at the trap centre, T.
    pub field: f64,
    /// Background loss γ_0, 1/s.
    pub background_loss: f64,
}

impl TrapSpec {
    pub fn validate(&self) -> Result<()> {
        for (axis, w) in ["omega_x", "omega_y", "omega_z"].iter().zip(self.omega) {
            positive(axis, w)?;
        }
        positive("distance", self.distance)?;
        positive("field", self.field)?;
        if !(self.background_loss.is_finite() && self.background_loss >= 0.0) {
            return Err(Error::invalid("background_loss", "must be >= 0"));
        }
        Ok(())
    }

    /// Geometric mean trap frequency ω̄_t.
    pub fn mean_frequency(&self) -> f64 {
        (self.omega[0] * self.omega[1] * self.omega[2]).cbrt()
    }

    /// Same aspect ratio, rescaled so that the geometric mean equals `omega_bar`.
    pub fn with_mean_frequency(&self, omega_bar: f64) -> Self {
        let s = omega_bar / self.mean_frequency();
        Self { omega: self.omega.map(|w| w * s), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensateSpec {
    pub atom_number: u64,
    /// δ = ω_r − ω_L, rad/s, signed.
    pub detuning: f64,
}

impl CondensateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.atom_number < 1 {
            return Err(Error::invalid("atom_number", "must be >= 1"));
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        Ok(())
    }
}

/// How ω_r was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyRoute {
    BeamFormula,
    Override,
}

/// How G_m was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientRoute {
    Dipole,
    Capped,
    Supplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    /// T/m
    pub value: f64,
    pub route: GradientRoute,
    /// Uncapped dipole value, T/m (equal to `value` unless capped or supplied).
    pub dipole: f64,
}

/// Thomas-Fermi ground state of the trapped condensate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThomasFermi {
    /// Chemical potential μ_c, J.
    pub chemical_potential: f64,
    /// Thomas-Fermi radii (R_x, R_y, R_z), m.
    pub radii: [f64; 3],
}

/// Outcome of C = g²/2κγ. A vanishing dissipation rate is reported as
/// [`Cooperativity::Infinite`] instead of a floating-point infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cooperativity {
    Finite(f64),
    Infinite,
}

impl Cooperativity {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Cooperativity::Finite(c) => Some(c),
            Cooperativity::Infinite => None,
        }
    }

    /// N-atom cooperativity C·N.
    pub fn collective(&self, atom_number: u64) -> Cooperativity {
        match *self {
            Cooperativity::Finite(c) => Cooperativity::Finite(c * atom_number as f64),
            Cooperativity::Infinite => Cooperativity::Infinite,
        }
    }
}

/// Every coupled-system quantity derived from the device specifications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub omega_r: f64,
    pub omega_r_route: FrequencyRoute,
    pub m_eff: f64,
    pub a_qm: f64,
    pub kappa: f64,
    pub gradient: f64,
    pub gradient_route: GradientRoute,
    pub gradient_dipole: f64,
    pub mu_c: f64,
    pub tf_radii: [f64; 3],
    /// Three-body part of γ, 1/s (zero for a single atom).
    pub gamma_three_body: f64,
    /// Total atomic loss γ = γ_tbl + γ_0, 1/s.
    pub gamma: f64,
    pub omega_l: f64,
    pub omega_bar_t: f64,
    pub n_th: f64,
    pub g: f64,
    pub cooperativity: Cooperativity,
    pub atom_number: u64,
    pub detuning: f64,
    pub temperature: f64,
    /// Ω_R per unit cantilever amplitude, rad/(s·m).
    pub rabi_per_amplitude: f64,
}

impl DerivedParams {
    /// Collective coupling g√N.
    pub fn collective_g(&self) -> f64 {
        self.g * (self.atom_number as f64).sqrt()
    }
}

/// Complete set of inputs to [`derive_all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub cantilever: CantileverSpec,
    pub magnet: MagnetSpec,
    pub trap: TrapSpec,
    pub condensate: CondensateSpec,
    /// K
    pub temperature: f64,
}

impl Device {
    pub fn derive(&self, consts: &PhysicalConstants) -> Result<DerivedParams> {
        derive_all(&self.cantilever, &self.magnet, &self.trap, &self.condensate, self.temperature, consts)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite and > 0"))
    }
}

/// Fundamental out-of-plane flexural frequency ω_r (rad/s).
pub fn cantilever_frequency(spec: &CantileverSpec) -> Result<(f64, FrequencyRoute)> {
    spec.validate()?;
    if let Some(w) = spec.frequency_override {
        return Ok((w, FrequencyRoute::Override));
    }
    let c = spec.tip_mass_ratio();
    let w = 2.0 * PI
        * FLEXURAL_PREFACTOR
        * (spec.youngs_modulus / (spec.density * (1.0 + c))).sqrt()
        * (spec.thickness / (spec.length * spec.length));
    if !w.is_finite() || w <= 0.0 {
        return Err(Error::invalid("cantilever", "degenerate dimensions give a non-finite frequency"));
    }
    Ok((w, FrequencyRoute::BeamFormula))
}

/// m_eff = 0.24 ρ l w t + m.
pub fn effective_mass(spec: &CantileverSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.modal_beam_mass() + spec.tip_mass)
}

/// Field gradient of the coupling magnet at distance `y_0`, treating the bar as
/// a point dipole and applying the trap-distortion cap.
pub fn dipole_gradient(magnet: &MagnetSpec, y_0: f64, consts: &PhysicalConstants) -> Result<Gradient> {
    if !(y_0.is_finite() && y_0 > 0.0) {
        return Err(Error::Domain(format!("trap distance y_0 must be > 0, got {y_0}")));
    }
    let dipole = 3.0 * consts.mu_0 * magnet.dipole_moment() / (4.0 * PI * y_0.powi(4));
    if let Some(g) = magnet.gradient {
        return Ok(Gradient { value: g, route: GradientRoute::Supplied, dipole });
    }
    match magnet.gradient_cap {
        Some(cap) if cap < dipole => Ok(Gradient { value: cap, route: GradientRoute::Capped, dipole }),
        _ => Ok(Gradient { value: dipole, route: GradientRoute::Dipole, dipole }),
    }
}

/// Thomas-Fermi chemical potential and radii for `N` atoms in the trap.
pub fn chemical_potential(cond: &CondensateSpec, trap: &TrapSpec, consts: &PhysicalConstants) -> ThomasFermi {
    let wbar = trap.mean_frequency();
    let oscillator_length = (consts.hbar / (consts.atom_mass * wbar)).sqrt();
    let n = cond.atom_number as f64;
    let mu = 0.5
        * consts.hbar
        * wbar
        * (15.0 * n * consts.scattering_length / oscillator_length).powf(0.4);
    let radii = trap
        .omega
        .map(|w| (2.0 * mu / (consts.atom_mass * w * w)).sqrt());
    ThomasFermi { chemical_potential: mu, radii }
}

/// γ_tbl = 2.2×10⁻¹² s^{7/5} · ω̄_t^{12/5} · N^{4/5}, with ω̄_t in rad/s.
pub fn three_body_loss(omega_bar: f64, atom_number: u64) -> f64 {
    THREE_BODY_COEFFICIENT * omega_bar.powf(2.4) * (atom_number as f64).powf(0.8)
}

/// Total atomic loss γ = γ_tbl + γ_0. A single atom has no collisional loss.
pub fn three_body_rate(trap: &TrapSpec, atom_number: u64) -> f64 {
    let tbl = if atom_number <= 1 { 0.0 } else { three_body_loss(trap.mean_frequency(), atom_number) };
    tbl + trap.background_loss
}

/// ω_L = μ_B |g_F| B_0 / ħ.
pub fn larmor_frequency(field: f64, consts: &PhysicalConstants) -> f64 {
    consts.mu_b * consts.g_f.abs() * field / consts.hbar
}

/// Bose-Einstein occupancy of the mode at temperature `t` (K).
pub fn thermal_occupancy(omega_r: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = consts.hbar * omega_r / (consts.k_b * t);
    1.0 / x.exp_m1()
}

/// r.m.s. zero-point amplitude √(ħ / 2 m_eff ω_r).
pub fn zero_point_amplitude(m_eff: f64, omega_r: f64, consts: &PhysicalConstants) -> f64 {
    (consts.hbar / (2.0 * m_eff * omega_r)).sqrt()
}

/// Rabi frequency per unit amplitude, μ_B G_m / (√8 ħ).
pub fn rabi_per_amplitude(gradient: f64, consts: &PhysicalConstants) -> f64 {
    consts.mu_b * gradient / (2.0 * SQRT_2 * consts.hbar)
}

/// Single-atom single-phonon coupling g = μ_B G_m a_qm / (√8 ħ).
pub fn coupling_g(gradient: f64, a_qm: f64, consts: &PhysicalConstants) -> f64 {
    rabi_per_amplitude(gradient, consts) * a_qm
}

/// Amplitude damping rate κ = ω_r / 2Q.
pub fn damping_rate(omega_r: f64, quality_factor: f64) -> f64 {
    omega_r / (2.0 * quality_factor)
}

pub fn cooperativity(g: f64, kappa: f64, gamma: f64) -> Cooperativity {
    if kappa == 0.0 || gamma == 0.0 {
        return Cooperativity::Infinite;
    }
    Cooperativity::Finite(g * g / (2.0 * kappa * gamma))
}

/// Runs the full derivation chain.
pub fn derive_all(
    cantilever: &CantileverSpec,
    magnet: &MagnetSpec,
    trap: &TrapSpec,
    condensate: &CondensateSpec,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<DerivedParams> {
    consts.validate().map_err(|e| e.within("constants"))?;
    cantilever.validate().map_err(|e| e.within("cantilever"))?;
    magnet.validate().map_err(|e| e.within("magnet"))?;
    trap.validate().map_err(|e| e.within("trap"))?;
    condensate.validate().map_err(|e| e.within("condensate"))?;
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::invalid("temperature", "must be >= 0"));
    }

    let (omega_r, omega_r_route) = cantilever_frequency(cantilever).map_err(|e| e.within("cantilever"))?;
    let m_eff = effective_mass(cantilever).map_err(|e| e.within("cantilever"))?;
    let a_qm = zero_point_amplitude(m_eff, omega_r, consts);
    let kappa = damping_rate(omega_r, cantilever.quality_factor);
    let grad = dipole_gradient(magnet, trap.distance, consts).map_err(|e| e.within("trap"))?;
    let tf = chemical_potential(condensate, trap, consts);
    let omega_bar_t = trap.mean_frequency();
    let gamma = three_body_rate(trap, condensate.atom_number);
    let g = coupling_g(grad.value, a_qm, consts);

    Ok(DerivedParams {
        omega_r,
        omega_r_route,
        m_eff,
        a_qm,
        kappa,
        gradient: grad.value,
        gradient_route: grad.route,
        gradient_dipole: grad.dipole,
        mu_c: tf.chemical_potential,
        tf_radii: tf.radii,
        gamma_three_body: gamma - trap.background_loss,
        gamma,
        omega_l: larmor_frequency(trap.field, consts),
        omega_bar_t,
        n_th: thermal_occupancy(omega_r, temperature, consts),
        g,
        cooperativity: cooperativity(g, kappa, gamma),
        atom_number: condensate.atom_number,
        detuning: condensate.detuning,
        temperature,
        rabi_per_amplitude: rabi_per_amplitude(grad.value, consts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{angular, hertz, COBALT_DENSITY, COBALT_MAGNETIZATION, SILICON_DENSITY, SILICON_YOUNGS_MODULUS};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const UM: f64 = 1e-6;
    const NM: f64 = 1e-9;

    fn beam(l: f64, w: f64, t: f64, tip: f64) -> CantileverSpec {
        CantileverSpec {
            length: l * UM,
            width: w * UM,
            thickness: t * UM,
            youngs_modulus: SILICON_YOUNGS_MODULUS,
            density: SILICON_DENSITY,
            quality_factor: 1e5,
            tip_mass: tip,
            frequency_override: None,
        }
    }

    fn bar(l: f64, w: f64, t: f64) -> MagnetSpec {
        MagnetSpec {
            length: l,
            width: w,
            thickness: t,
            magnetization: COBALT_MAGNETIZATION,
            gap: 40.0 * NM,
            gradient_cap: None,
            gradient: None,
        }
    }

    fn probe_trap() -> TrapSpec {
        TrapSpec {
            omega: [angular(8.9e3), angular(9.7e3), angular(1.2e3)],
            distance: 1.5 * UM,
            field: 1.6e-4,
            background_loss: 0.0,
        }
    }

    #[test]
    fn beam_frequency_matches_direct_evaluation() {
        // oracle: mpmath evaluation of 2π·0.16·√(E/ρ)·t/l²
        let (w, route) = cantilever_frequency(&beam(7.0, 0.2, 0.1, 0.0)).unwrap();
        assert_eq!(route, FrequencyRoute::BeamFormula);
        assert_relative_eq!(hertz(w), 2_780_925.115_769_939, max_relative = 1e-12);
    }

    #[test]
    fn override_is_returned_verbatim() {
        let mut c = beam(7.0, 0.2, 0.1, 0.0);
        c.frequency_override = Some(angular(1.12e6));
        let (w, route) = cantilever_frequency(&c).unwrap();
        assert_eq!(w, angular(1.12e6));
        assert_eq!(route, FrequencyRoute::Override);
    }

    #[test]
    fn tip_mass_scaling() {
        let free = beam(7.0, 0.2, 0.1, 0.0);
        let loaded = CantileverSpec { tip_mass: 3.0 * free.modal_beam_mass(), ..free };
        let (w0, _) = cantilever_frequency(&free).unwrap();
        let (w3, _) = cantilever_frequency(&loaded).unwrap();
        assert_relative_eq!(w0 / w3, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn effective_mass_examples() {
        let m = effective_mass(&beam(7.0, 0.2, 0.1, 2.2e-16)).unwrap();
        assert!((m / 3e-16 - 1.0).abs() < 0.03, "m_eff = {m:e}");
        let c = beam(1.0, 1.0, 1.0, 0.0);
        assert_eq!(effective_mass(&c).unwrap(), 0.24 * c.density * c.length * c.width * c.thickness);
        assert_relative_eq!(beam(8.0, 0.3, 0.05, 0.0).modal_beam_mass(), 6.7104e-17, max_relative = 1e-12);
    }

    #[test]
    fn cantilever_ordering_enforced() {
        assert!(beam(7.0, 0.1, 0.2, 0.0).validate().is_err());
        let mut c = beam(7.0, 0.2, 0.1, 0.0);
        c.quality_factor = 0.5;
        assert!(c.validate().is_err());
        c.quality_factor = 10.0;
        c.tip_mass = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dipole_gradient_examples() {
        let k = PhysicalConstants::default();
        let m = bar(250.0 * NM, 50.0 * NM, 80.0 * NM);
        assert_relative_eq!(m.dipole_moment(), 1.4e-15, max_relative = 1e-12);
        let g = dipole_gradient(&m, 250.0 * NM, &k).unwrap();
        assert_eq!(g.route, GradientRoute::Dipole);
        assert_relative_eq!(g.value, 107_520.000_058_531_28, max_relative = 1e-10);

        let g2 = dipole_gradient(&m, 500.0 * NM, &k).unwrap();
        assert_relative_eq!(g.value / g2.value, 16.0, max_relative = 1e-13);

        let capped = MagnetSpec { gradient_cap: Some(1e3), ..m };
        let g3 = dipole_gradient(&capped, 250.0 * NM, &k).unwrap();
        assert_eq!(g3.value, 1e3);
        assert_eq!(g3.route, GradientRoute::Capped);

        let supplied = MagnetSpec { gradient: Some(1234.5), ..capped };
        assert_eq!(dipole_gradient(&supplied, 250.0 * NM, &k).unwrap().value, 1234.5);

        assert!(matches!(dipole_gradient(&m, 0.0, &k), Err(Error::Domain(_))));
    }

    #[test]
    fn chemical_potential_probe_trap() {
        let k = PhysicalConstants::default();
        let trap = probe_trap();
        assert_relative_eq!(hertz(trap.mean_frequency()), 4_696.572_119_513_166, max_relative = 1e-12);
        let tf = chemical_potential(&CondensateSpec { atom_number: 1000, detuning: 0.0 }, &trap, &k);
        // oracle: independent mpmath evaluation
        assert_relative_eq!(tf.chemical_potential, 1.876_653_475_629_290_5e-29, max_relative = 1e-10);
        for (r, w) in tf.radii.iter().zip(trap.omega) {
            assert_relative_eq!(0.5 * k.atom_mass * w * w * r * r, tf.chemical_potential, max_relative = 1e-12);
        }
    }

    #[test]
    fn chemical_potential_limits() {
        let trap = probe_trap();
        let c1 = CondensateSpec { atom_number: 1, detuning: 0.0 };
        let mut prev = f64::INFINITY;
        for a in [1e-9, 1e-11, 1e-13, 1e-15] {
            let k = PhysicalConstants { scattering_length: a, ..Default::default() };
            let mu = chemical_potential(&c1, &trap, &k).chemical_potential;
            assert!(mu < prev);
            prev = mu;
        }
        assert!(prev < 1e-31);

        let k = PhysicalConstants::default();
        let mu1 = chemical_potential(&CondensateSpec { atom_number: 100, detuning: 0.0 }, &trap, &k);
        let mu32 = chemical_potential(&CondensateSpec { atom_number: 3200, detuning: 0.0 }, &trap, &k);
        assert_relative_eq!(mu32.chemical_potential / mu1.chemical_potential, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn three_body_examples() {
        let trap = TrapSpec {
            omega: [angular(2.9e3); 3],
            distance: 2.0 * UM,
            field: 1.0e-4,
            background_loss: 0.0,
        };
        let g = three_body_rate(&trap, 10_000);
        assert_relative_eq!(g, 58.588_119_653_339_62, max_relative = 1e-10);
        assert!((g / angular(10.0) - 1.0).abs() < 0.10);

        let g8 = three_body_rate(&trap, 80_000);
        assert_relative_eq!(g8 / g, 8f64.powf(0.8), max_relative = 1e-12);

        let single = TrapSpec { background_loss: angular(0.3), ..trap };
        assert_eq!(three_body_rate(&single, 1), angular(0.3));
    }

    #[test]
    fn larmor_examples() {
        let k = PhysicalConstants::default();
        assert_relative_eq!(hertz(larmor_frequency(1e-4, &k)), 699_812.247_232_423_6, max_relative = 1e-12);
        assert_relative_eq!(larmor_frequency(2e-4, &k), 2.0 * larmor_frequency(1e-4, &k), max_relative = 1e-15);
        let b0 = angular(1.12e6) / larmor_frequency(1.0, &k);
        assert_relative_eq!(b0 * 1e4, 1.600_429_264_319_552, max_relative = 1e-12);
    }

    #[test]
    fn thermal_occupancy_examples() {
        let k = PhysicalConstants::default();
        let n = thermal_occupancy(angular(1.1e6), 0.05, &k);
        assert_relative_eq!(n, 946.619_139_626_783_6, max_relative = 1e-10);
        assert!((n / 980.0 - 1.0).abs() < 0.05);
        assert_eq!(thermal_occupancy(angular(1.1e6), 0.0, &k), 0.0);
        let w = angular(1.0e6);
        let t = 60.0 * k.hbar * w / k.k_b;
        let classical = k.k_b * t / (k.hbar * w);
        assert!((thermal_occupancy(w, t, &k) / classical - 1.0).abs() < 0.01);
    }

    #[test]
    fn zero_point_examples() {
        let k = PhysicalConstants::default();
        assert_relative_eq!(
            zero_point_amplitude(3e-16, angular(1.12e6), &k),
            1.580_387_222_370_900_2e-13,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            zero_point_amplitude(7.6e-17, angular(2.8e6), &k),
            1.985_854_094_112_925e-13,
            max_relative = 1e-12
        );
        let a = zero_point_amplitude(1e-16, 1e7, &k);
        assert_relative_eq!(zero_point_amplitude(4e-16, 1e7, &k), a / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn coupling_examples() {
        let k = PhysicalConstants::default();
        assert_eq!(coupling_g(0.0, 1e-13, &k), 0.0);
        let a_qm = 2e-13;
        let gm = 8f64.sqrt() * k.hbar / (k.mu_b * a_qm);
        assert_relative_eq!(coupling_g(gm, a_qm, &k), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn damping_examples() {
        assert_relative_eq!(damping_rate(angular(2.8e6), 1e5), angular(14.0), max_relative = 4.0 * f64::EPSILON);
        let k = damping_rate(angular(1.1e6), 1e5);
        assert_relative_eq!(k, angular(5.5), max_relative = 1e-15);
        assert!(damping_rate(1e7, 1e300) < 1e-290);
    }

    #[test]
    fn cooperativity_examples() {
        let c = cooperativity(angular(62.0), angular(14.0), angular(0.3)).value().unwrap();
        assert_relative_eq!(c, 457.619_047_619_047_6, max_relative = 1e-12);
        assert_eq!(cooperativity(0.0, 1.0, 1.0), Cooperativity::Finite(0.0));
        assert_eq!(cooperativity(1.0, 0.0, 1.0), Cooperativity::Infinite);
        assert_eq!(cooperativity(1.0, 1.0, 0.0).collective(10), Cooperativity::Infinite);
    }

    fn single_atom_specs() -> (CantileverSpec, MagnetSpec, TrapSpec, CondensateSpec) {
        let magnet = bar(250.0 * NM, 50.0 * NM, 80.0 * NM);
        let cantilever = CantileverSpec {
            tip_mass: COBALT_DENSITY * magnet.volume(),
            frequency_override: Some(angular(2.8e6)),
            ..beam(8.0, 0.3, 0.05, 0.0)
        };
        let trap = TrapSpec {
            omega: [angular(250e3); 3],
            distance: 250.0 * NM,
            field: 4.0e-4,
            background_loss: angular(0.3),
        };
        (cantilever, magnet, trap, CondensateSpec { atom_number: 1, detuning: 0.0 })
    }

    #[test]
    fn single_atom_chain() {
        let (c, m, t, n) = single_atom_specs();
        let d = derive_all(&c, &m, &t, &n, 0.0, &PhysicalConstants::default()).unwrap();
        assert_relative_eq!(hertz(d.g), 105.655_401_540_308_33, max_relative = 1e-9);
        let ratio = d.g / angular(62.0);
        assert!((0.5..=2.0).contains(&ratio));
        assert_relative_eq!(d.kappa, angular(14.0), max_relative = 1e-14);
        assert_eq!(d.gamma, angular(0.3));
        assert_eq!(d.gamma_three_body, 0.0);
        assert_eq!(d.omega_r_route, FrequencyRoute::Override);
    }

    #[test]
    fn supplied_gradient_passes_through() {
        let (c, mut m, t, n) = single_atom_specs();
        m.gradient = Some(6.3e4);
        let k = PhysicalConstants::default();
        let d = derive_all(&c, &m, &t, &n, 0.0, &k).unwrap();
        assert_eq!(d.gradient, 6.3e4);
        assert_eq!(d.gradient_route, GradientRoute::Supplied);
        assert_eq!(d.g, coupling_g(6.3e4, d.a_qm, &k));
    }

    #[test]
    fn derive_is_deterministic_and_tags_errors() {
        let (c, m, t, n) = single_atom_specs();
        let k = PhysicalConstants::default();
        let a = derive_all(&c, &m, &t, &n, 0.05, &k).unwrap();
        let b = derive_all(&c, &m, &t, &n, 0.05, &k).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));

        let bad = TrapSpec { distance: -1.0, ..t };
        match derive_all(&c, &m, &bad, &n, 0.05, &k) {
            Err(Error::InvalidSpec { field, .. }) => assert_eq!(field, "trap.distance"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_audit_scalings() {
        let k = PhysicalConstants::default();
        let (c, m, t, n) = single_atom_specs();
        let base = derive_all(&c, &m, &t, &n, 0.0, &k).unwrap();

        // y_0 → 2 y_0: G_m and g fall by 16.
        let far = TrapSpec { distance: 2.0 * t.distance, ..t };
        let d = derive_all(&c, &m, &far, &n, 0.0, &k).unwrap();
        assert_relative_eq!(base.gradient / d.gradient, 16.0, max_relative = 1e-12);
        assert_relative_eq!(base.g / d.g, 16.0, max_relative = 1e-12);

        // ω̄_t → s ω̄_t: μ_c ∝ ω̄^{6/5}, γ_tbl ∝ ω̄^{12/5}, radii ∝ ω̄^{-2/5}.
        let s = 1.7;
        let cond = CondensateSpec { atom_number: 5000, detuning: 0.0 };
        let d0 = derive_all(&c, &m, &t, &cond, 0.0, &k).unwrap();
        let d1 = derive_all(&c, &m, &t.with_mean_frequency(s * t.mean_frequency()), &cond, 0.0, &k).unwrap();
        assert_relative_eq!(d1.mu_c / d0.mu_c, s.powf(1.2), max_relative = 1e-12);
        assert_relative_eq!(d1.gamma_three_body / d0.gamma_three_body, s.powf(2.4), max_relative = 1e-12);
        assert_relative_eq!(d1.tf_radii[2] / d0.tf_radii[2], s.powf(-0.4), max_relative = 1e-12);

        // ω_r → s ω_r: κ ∝ ω_r, a_qm ∝ ω_r^{-1/2}.
        let c2 = CantileverSpec { frequency_override: Some(s * base.omega_r), ..c };
        let d2 = derive_all(&c2, &m, &t, &n, 0.0, &k).unwrap();
        assert_relative_eq!(d2.kappa / base.kappa, s, max_relative = 1e-14);
        assert_relative_eq!(d2.a_qm / base.a_qm, s.powf(-0.5), max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn occupancy_increases_with_temperature(t in 1e-6f64..10.0, f in 1.01f64..2.0) {
            let k = PhysicalConstants::default();
            let w = angular(1.1e6);
            prop_assert!(thermal_occupancy(w, t * f, &k) > thermal_occupancy(w, t, &k));
        }

        #[test]
        fn three_body_increases(n in 2u64..1_000_000, w in 1e3f64..1e6) {
            prop_assert!(three_body_loss(w, n + 1) > three_body_loss(w, n));
            prop_assert!(three_body_loss(w * 1.01, n) > three_body_loss(w, n));
        }

        #[test]
        fn coupling_increases_with_gradient(gm in 1.0f64..1e6) {
            let k = PhysicalConstants::default();
            prop_assert!(coupling_g(gm * 1.001, 1e-13, &k) > coupling_g(gm, 1e-13, &k));
        }
    }
}
