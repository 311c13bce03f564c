//! Scenario files (TOML). Parsing is strict: unknown keys, missing units and
//! sections that the scenario kind does not use are all rejected.

use serde::{Deserialize, Serialize};

use mechqed::optimize::{Axis, CapRule, Constraints, FigureOfMerit, Knob, SearchBudget};
use mechqed::params::{CantileverSpec, CondensateSpec, Device, MagnetSpec, TrapSpec};
use mechqed::tcdyn::{DeltaSchedule, ModelParams, SpinPreparation};
use mechqed::PhysicalConstants;

use crate::units::{
    Density, Field, Frequency, FrequencyDim, Gradient, Length, LengthDim, Magnetization, Mass, Pressure, Rate,
    Temperature, Time,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Derive,
    Histogram,
    Evolve,
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Temperature>,
    #[serde(default, skip_serializing_if = "ConstantsSection::is_empty")]
    pub constants: ConstantsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cantilever: Option<CantileverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnet: Option<MagnetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condensate: Option<CondensateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

/// Overrides of the physical constants. Plain numbers are SI in the unit named by the key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar_j_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bohr_magneton_j_per_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boltzmann_j_per_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vacuum_permeability_t_m_per_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_mass: Option<Mass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering_length: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_f: Option<f64>,
}

impl ConstantsSection {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn resolve(&self) -> PhysicalConstants {
        let d = PhysicalConstants::default();
        PhysicalConstants {
            hbar: self.hbar_j_s.unwrap_or(d.hbar),
            mu_b: self.bohr_magneton_j_per_t.unwrap_or(d.mu_b),
            k_b: self.boltzmann_j_per_k.unwrap_or(d.k_b),
            mu_0: self.vacuum_permeability_t_m_per_a.unwrap_or(d.mu_0),
            atom_mass: self.atom_mass.map_or(d.atom_mass, |q| q.value()),
            scattering_length: self.scattering_length.map_or(d.scattering_length, |q| q.value()),
            g_f: self.g_f.unwrap_or(d.g_f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantileverSection {
    pub length: Length,
    pub width: Length,
    pub thickness: Length,
    pub youngs_modulus: Pressure,
    pub density: Density,
    pub quality_factor: f64,
    /// Total tip mass. Alternative to `paddle_mass` plus `magnet.density`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tip_mass: Option<Mass>,
    /// Non-magnetic mass at the tip, added to the magnet mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paddle_mass: Option<Mass>,
    /// Measured or quoted mode frequency, bypassing the beam formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<Frequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetSection {
    pub length: Length,
    pub width: Length,
    pub thickness: Length,
    pub magnetization: Magnetization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<Length>,
    /// Material density, used for the tip mass when the cantilever gives none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Density>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_cap: Option<Gradient>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Gradient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub frequencies: [Frequency; 3],
    pub distance: Length,
    pub field: Field,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_loss: Option<Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensateSection {
    pub atom_number: u64,
    /// δ = ω_r − ω_L. Exclusive with `shell_radius`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Frequency>,
    /// Resonance shell radius r_c; sets ħδ = r_c² μ_c.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_radius: Option<f64>,
}

fn default_noise() -> f64 {
    0.05
}
fn default_bins() -> usize {
    50
}
fn default_range_max() -> f64 {
    1.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSection {
    pub shots: usize,
    /// Coupling time. Exclusive with `mean_gamma_tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Time>,
    /// Sets τ = value / ⟨Γ_r⟩.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_gamma_tau: Option<f64>,
    #[serde(default = "default_noise")]
    pub technical_noise: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_range_max")]
    pub range_max: f64,
    /// Defaults to the derived atom-loss rate γ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_background: Option<Rate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    Master,
    Mcwf,
}

fn default_points() -> usize {
    101
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_atol() -> f64 {
    1e-10
}
fn default_max_dim() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub engine: EngineChoice,
    pub atoms: u32,
    pub preparation: SpinPreparation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    /// Fock cutoff n_max; chosen from the thermal tail when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    /// Initial phonon occupancy; defaults to n_th.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_occupancy: Option<f64>,
    /// Defaults to three collective transfer times π/(2g√N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<Time>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_max_dim")]
    pub max_master_dim: usize,
    /// Explicit rates; taken from the device sections when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub g: Frequency,
    pub kappa: Rate,
    pub gamma: Rate,
    pub n_th: f64,
    #[serde(default = "zero_frequency")]
    pub delta: Frequency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
}

fn zero_frequency() -> Frequency {
    Frequency::si(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub times: Vec<Time>,
    pub deltas: Vec<Frequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub knob: Knob,
    /// Frequency for trap and detuning knobs, length otherwise.
    pub lower: String,
    pub upper: String,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum CapRuleSection {
    Fixed { value: Gradient },
    TrapScaled { ratio: f64 },
}

fn default_grid() -> usize {
    9
}
fn default_evals() -> usize {
    2000
}
fn default_min_step() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub figure: FigureOfMerit,
    pub axes: Vec<AxisSection>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_evals")]
    pub max_evaluations: usize,
    #[serde(default = "default_min_step")]
    pub min_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_min: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_rule: Option<CapRuleSection>,
    #[serde(default)]
    pub weak_coupling: bool,
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn knob_is_frequency(k: Knob) -> bool {
    matches!(k, Knob::TrapMeanFrequency | Knob::Detuning)
}

fn axis_bound(knob: Knob, text: &str) -> Result<f64, CliError> {
    let r = if knob_is_frequency(knob) {
        crate::units::parse::<FrequencyDim>(text)
    } else {
        crate::units::parse::<LengthDim>(text)
    };
    r.map_err(|e| cfg_err(format!("optimize.axes.{}: {e}", knob.name())))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.normalize()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML of the resolved config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rewrites free-form axis bounds in canonical SI.
    fn normalize(&mut self) -> Result<(), CliError> {
        if let Some(opt) = &mut self.optimize {
            for a in &mut opt.axes {
                let unit = if knob_is_frequency(a.knob) { "rad/s" } else { "m" };
                a.lower = format!("{:e} {unit}", axis_bound(a.knob, &a.lower)?);
                a.upper = format!("{:e} {unit}", axis_bound(a.knob, &a.upper)?);
            }
        }
        Ok(())
    }

    fn has_device(&self) -> bool {
        self.cantilever.is_some() || self.magnet.is_some() || self.trap.is_some() || self.condensate.is_some()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(cfg_err("name must be a plain, non-empty file name"));
        }
        let needs_device = matches!(self.kind, ScenarioKind::Derive | ScenarioKind::Histogram | ScenarioKind::Optimize);
        let forbid = |present: bool, section: &str| -> Result<(), CliError> {
            if present {
                Err(cfg_err(format!("section [{section}] is not used by a {:?} scenario", self.kind).to_lowercase()))
            } else {
                Ok(())
            }
        };
        forbid(self.histogram.is_some() && self.kind != ScenarioKind::Histogram, "histogram")?;
        forbid(self.evolve.is_some() && self.kind != ScenarioKind::Evolve, "evolve")?;
        forbid(self.optimize.is_some() && self.kind != ScenarioKind::Optimize, "optimize")?;
        if needs_device && !self.has_device() {
            return Err(cfg_err("device sections [cantilever], [magnet], [trap], [condensate] are required"));
        }
        if self.has_device() {
            self.device()?;
        }
        match self.kind {
            ScenarioKind::Histogram => {
                let h = self.histogram.as_ref().ok_or_else(|| cfg_err("missing [histogram] section"))?;
                if h.tau.is_some() == h.mean_gamma_tau.is_some() {
                    return Err(cfg_err("histogram: give exactly one of tau and mean_gamma_tau"));
                }
                if self.temperature.is_none() {
                    return Err(cfg_err("histogram scenarios need a temperature"));
                }
            }
            ScenarioKind::Evolve => {
                let e = self.evolve.as_ref().ok_or_else(|| cfg_err("missing [evolve] section"))?;
                if e.model.is_none() && !self.has_device() {
                    return Err(cfg_err("evolve: give [evolve.model] or the device sections"));
                }
                if e.model.is_some() && self.has_device() {
                    return Err(cfg_err("evolve: [evolve.model] and device sections are exclusive"));
                }
                if e.engine == EngineChoice::Mcwf && e.trajectories.is_none() {
                    return Err(cfg_err("evolve: mcwf engine needs trajectories"));
                }
                if e.engine == EngineChoice::Master && e.trajectories.is_some() {
                    return Err(cfg_err("evolve: trajectories only apply to the mcwf engine"));
                }
                if e.atoms < 1 {
                    return Err(cfg_err("evolve.atoms must be >= 1"));
                }
            }
            ScenarioKind::Optimize => {
                let o = self.optimize.as_ref().ok_or_else(|| cfg_err("missing [optimize] section"))?;
                if o.axes.is_empty() {
                    return Err(cfg_err("optimize: at least one axis is required"));
                }
                for a in self.axes()? {
                    a.validate().map_err(|e| cfg_err(e.to_string()))?;
                }
            }
            ScenarioKind::Derive => {}
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants.resolve()
    }

    /// Device specs, with the detuning still unresolved when `shell_radius` is used.
    pub fn device(&self) -> Result<Device, CliError> {
        let missing = |s: &str| cfg_err(format!("missing [{s}] section"));
        let c = self.cantilever.as_ref().ok_or_else(|| missing("cantilever"))?;
        let m = self.magnet.as_ref().ok_or_else(|| missing("magnet"))?;
        let t = self.trap.as_ref().ok_or_else(|| missing("trap"))?;
        let n = self.condensate.as_ref().ok_or_else(|| missing("condensate"))?;
        let magnet = MagnetSpec {
            length: m.length.value(),
            width: m.width.value(),
            thickness: m.thickness.value(),
            magnetization: m.magnetization.value(),
            gap: m.gap.map_or(0.0, |q| q.value()),
            gradient_cap: m.gradient_cap.map(|q| q.value()),
            gradient: m.gradient.map(|q| q.value()),
        };
        let tip_mass = match (c.tip_mass, m.density) {
            (Some(tip), None) if c.paddle_mass.is_none() => tip.value(),
            (None, Some(rho)) => c.paddle_mass.map_or(0.0, |q| q.value()) + rho.value() * magnet.volume(),
            _ => {
                return Err(cfg_err(
                    "tip mass: give either cantilever.tip_mass, or magnet.density (optionally with cantilever.paddle_mass)",
                ))
            }
        };
        if n.detuning.is_some() && n.shell_radius.is_some() {
            return Err(cfg_err("condensate: detuning and shell_radius are exclusive"));
        }
        if let Some(r) = n.shell_radius {
            if !(0.0..=1.0).contains(&r) {
                return Err(cfg_err("condensate.shell_radius must lie in [0, 1]"));
            }
        }
        Ok(Device {
            cantilever: CantileverSpec {
                length: c.length.value(),
                width: c.width.value(),
                thickness: c.thickness.value(),
                youngs_modulus: c.youngs_modulus.value(),
                density: c.density.value(),
                quality_factor: c.quality_factor,
                tip_mass,
                frequency_override: c.frequency.map(|q| q.value()),
            },
            magnet,
            trap: TrapSpec {
                omega: t.frequencies.map(|q| q.value()),
                distance: t.distance.value(),
                field: t.field.value(),
                background_loss: t.background_loss.map_or(0.0, |q| q.value()),
            },
            condensate: CondensateSpec { atom_number: n.atom_number, detuning: n.detuning.map_or(0.0, |q| q.value()) },
            temperature: self.temperature.map_or(0.0, |q| q.value()),
        })
    }

    pub fn axes(&self) -> Result<Vec<Axis>, CliError> {
        let o = self.optimize.as_ref().ok_or_else(|| cfg_err("missing [optimize] section"))?;
        o.axes
            .iter()
            .map(|a| {
                Ok(Axis { knob: a.knob, lower: axis_bound(a.knob, &a.lower)?, upper: axis_bound(a.knob, &a.upper)?, log: a.log })
            })
            .collect()
    }

    pub fn constraints(&self) -> Constraints {
        let o = self.optimize.as_ref();
        let m = self.magnet.as_ref();
        Constraints {
            distance_min: o.and_then(|o| o.distance_min).map(|q| q.value()),
            cap_rule: match o.and_then(|o| o.cap_rule.clone()) {
                None => CapRule::Unchanged,
                Some(CapRuleSection::Fixed { value }) => CapRule::Fixed { value: value.value() },
                Some(CapRuleSection::TrapScaled { ratio }) => CapRule::TrapScaled { ratio },
            },
            weak_coupling: o.is_some_and(|o| o.weak_coupling),
            magnet_density: m.and_then(|m| m.density).map(|q| q.value()),
            paddle_mass: self.cantilever.as_ref().and_then(|c| c.paddle_mass).map_or(0.0, |q| q.value()),
        }
    }

    pub fn budget(&self) -> SearchBudget {
        let o = self.optimize.as_ref().expect("validated");
        SearchBudget { grid_points: o.grid_points, max_evaluations: o.max_evaluations, min_step: o.min_step }
    }
}

impl ModelSection {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            g: self.g.value(),
            delta: self.delta.value(),
            kappa: self.kappa.value(),
            n_th: self.n_th,
            gamma_atom: self.gamma.value(),
            delta_schedule: self.schedule.as_ref().map(|s| DeltaSchedule {
                times: s.times.iter().map(|q| q.value()).collect(),
                deltas: s.deltas.iter().map(|q| q.value()).collect(),
            }),
            omega_r: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "derive"
name = "t"
temperature = "50 mK"
[cantilever]
length = "8 um"
width = "0.3 um"
thickness = "0.05 um"
youngs_modulus = "169 GPa"
density = "2330 kg/m^3"
quality_factor = 1e5
frequency = "2.8 MHz"
[magnet]
length = "250 nm"
width = "50 nm"
thickness = "80 nm"
magnetization = "1.4e6 A/m"
density = "8900 kg/m^3"
[trap]
frequencies = ["250 kHz", "250 kHz", "250 kHz"]
distance = "250 nm"
field = "4.0 G"
background_loss = "0.3 Hz"
[condensate]
atom_number = 1
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let echo = cfg.to_toml();
        let again = ScenarioConfig::from_toml(&echo).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(echo, again.to_toml());
        let d = cfg.device().unwrap();
        assert_eq!(d.cantilever.tip_mass, 8900.0 * d.magnet.volume());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("quality_factor = 1e5", "quality_factor = 1e5\nq_factor = 3");
        assert!(matches!(ScenarioConfig::from_toml(&bad), Err(CliError::Config(_))));
        let bad = MINIMAL.replace("kind = \"derive\"", "kind = \"derive\"\nsed = 3");
        assert!(ScenarioConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn missing_unit_is_rejected() {
        let bad = MINIMAL.replace("distance = \"250 nm\"", "distance = 250e-9");
        let err = ScenarioConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("no unit"), "{err}");
        let bad = MINIMAL.replace("2.8 MHz", "2.8 Mhz");
        assert!(ScenarioConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn section_kind_mismatch() {
        let bad = format!("{MINIMAL}[histogram]\nshots = 10\nmean_gamma_tau = 0.2\n");
        assert!(ScenarioConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn ambiguous_tip_mass() {
        let bad = MINIMAL.replace("quality_factor = 1e5", "quality_factor = 1e5\ntip_mass = \"1e-17 kg\"");
        assert!(ScenarioConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn constants_override() {
        let text = MINIMAL.replace("kind = \"derive\"", "kind = \"derive\"\n[constants]\ng_f = 0.5\natom_mass = \"1.4e-25 kg\"");
        // tables must follow plain keys, so move the block to the end
        let text = text.replacen("[constants]\ng_f = 0.5\natom_mass = \"1.4e-25 kg\"", "", 1)
            + "[constants]\ng_f = 0.5\natom_mass = \"1.4e-25 kg\"\n";
        let cfg = ScenarioConfig::from_toml(&text).unwrap();
        let k = cfg.constants();
        assert_eq!(k.g_f, 0.5);
        assert_eq!(k.atom_mass, 1.4e-25);
        assert_eq!(k.hbar, PhysicalConstants::default().hbar);
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
