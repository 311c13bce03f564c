//! Figure-of-merit search over device and trap parameters.
//!
//! The search is a seeded coarse grid scan followed by coordinate descent in
//! normalized coordinates. Ridges formed by a `min` of two limits (dipole
//! gradient against the gradient cap) are coordinatewise stationary, so the
//! grid resolution bounds the accuracy there; refinement only polishes.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::outcoupling::{detuning_for_shell, mean_gamma_r, thermal_amplitude_variance};
use crate::params::{DerivedParams, Device};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FigureOfMerit {
    /// ⟨Γ_r⟩/γ with the resonance shell at r_c = 1/√3.
    ProbeSnr,
    /// g/(κ+γ)
    SingleAtomStrongCoupling,
    /// g√N/(κ+γ)
    CollectiveStrongCoupling,
}

/// Tunable parameter of a [`Device`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    /// ω̄_t, rad/s; the trap aspect ratio is kept.
    TrapMeanFrequency,
    /// y_0, m
    Distance,
    MagnetLength,
    MagnetWidth,
    MagnetThickness,
    /// δ, rad/s
    Detuning,
}

impl Knob {
    pub fn name(&self) -> &'static str {
        match self {
            Knob::TrapMeanFrequency => "trap_mean_frequency",
            Knob::Distance => "distance",
            Knob::MagnetLength => "magnet_length",
            Knob::MagnetWidth => "magnet_width",
            Knob::MagnetThickness => "magnet_thickness",
            Knob::Detuning => "detuning",
        }
    }

    fn apply(&self, device: &mut Device, value: f64) {
        match self {
            Knob::TrapMeanFrequency => device.trap = device.trap.with_mean_frequency(value),
            Knob::Distance => device.trap.distance = value,
            Knob::MagnetLength => device.magnet.length = value,
            Knob::MagnetWidth => device.magnet.width = value,
            Knob::MagnetThickness => device.magnet.thickness = value,
            Knob::Detuning => device.condensate.detuning = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub knob: Knob,
    pub lower: f64,
    pub upper: f64,
    /// Sample uniformly in ln(value).
    pub log: bool,
}

impl Axis {
    pub fn validate(&self) -> Result<()> {
        let field = format!("optimize.{}", self.knob.name());
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.lower > self.upper {
            return Err(Error::invalid(&field, "bounds must be finite with lower <= upper"));
        }
        if self.log && self.lower <= 0.0 {
            return Err(Error::invalid(&field, "log axis needs positive bounds"));
        }
        Ok(())
    }

    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }

    /// Maps u ∈ [0, 1] onto the axis.
    pub fn value(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.is_fixed() {
            self.lower
        } else if self.log {
            (self.lower.ln() + u * (self.upper / self.lower).ln()).exp().clamp(self.lower, self.upper)
        } else {
            self.lower + u * (self.upper - self.lower)
        }
    }
}

/// How the gradient cap is set for each candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CapRule {
    /// Keep whatever the magnet spec says.
    Unchanged,
    /// G_m ≤ value, T/m.
    Fixed { value: f64 },
    /// G_m ≤ r · m_atom ω̄_t² y_0 / (μ_B |g_F|): the residual static gradient may
    /// shift the trap centre by at most a fixed fraction of y_0.
    TrapScaled { ratio: f64 },
}

impl CapRule {
    pub fn cap(&self, device: &Device, consts: &PhysicalConstants) -> Option<f64> {
        match *self {
            CapRule::Unchanged => device.magnet.gradient_cap,
            CapRule::Fixed { value } => Some(value),
            CapRule::TrapScaled { ratio } => {
                let w = device.trap.mean_frequency();
                Some(ratio * consts.atom_mass * w * w * device.trap.distance / (consts.mu_b * consts.g_f.abs()))
            }
        }
    }

    /// Trap-scaled ratio that puts the dipole gradient exactly on the cap at
    /// (`omega_bar`, `distance`).
    pub fn trap_scaled_through(device: &Device, omega_bar: f64, distance: f64, consts: &PhysicalConstants) -> Self {
        let dipole = 3.0 * consts.mu_0 * device.magnet.dipole_moment() / (4.0 * PI * distance.powi(4));
        let ratio = dipole * consts.mu_b * consts.g_f.abs() / (consts.atom_mass * omega_bar * omega_bar * distance);
        CapRule::TrapScaled { ratio }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    /// Smallest allowed trap-to-magnet distance, m.
    pub distance_min: Option<f64>,
    pub cap_rule: CapRule,
    /// Reject candidates with ħΩ_R ≥ μ_c at the thermal rms amplitude.
    pub weak_coupling: bool,
    /// When set, the tip mass follows the magnet volume at this density (kg/m³),
    /// on top of `paddle_mass`.
    pub magnet_density: Option<f64>,
    /// kg
    pub paddle_mass: f64,
}

impl Default for Constraints {
    fn default() -> Self {
        Self { distance_min: None, cap_rule: CapRule::Unchanged, weak_coupling: false, magnet_density: None, paddle_mass: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum Outcome {
    Feasible { score: f64 },
    Infeasible { reason: String },
}

impl Outcome {
    pub fn score(&self) -> Option<f64> {
        match self {
            Outcome::Feasible { score } => Some(*score),
            Outcome::Infeasible { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub outcome: Outcome,
    /// Present whenever the derivation chain itself succeeded.
    pub derived: Option<DerivedParams>,
    /// Device actually evaluated, after the constraint rules were applied.
    pub device: Device,
}

/// Score from already-known rates; `None` when κ+γ = 0.
pub fn score_from_rates(fom: FigureOfMerit, g: f64, kappa: f64, gamma: f64, atom_number: u64) -> Option<f64> {
    let loss = kappa + gamma;
    if !(loss > 0.0) {
        return None;
    }
    match fom {
        FigureOfMerit::SingleAtomStrongCoupling => Some(g / loss),
        FigureOfMerit::CollectiveStrongCoupling => Some(g * (atom_number as f64).sqrt() / loss),
        FigureOfMerit::ProbeSnr => None,
    }
}

/// ⟨Γ_r⟩ at r_c = 1/√3 and the thermal ⟨a²⟩, plus the regime flag.
fn probe_rate(d: &DerivedParams, consts: &PhysicalConstants) -> (f64, bool) {
    let delta = detuning_for_shell(1.0 / 3f64.sqrt(), d.mu_c, consts);
    let mean_sq = thermal_amplitude_variance(d.m_eff, d.omega_r, d.temperature, consts);
    let r = mean_gamma_r(d.rabi_per_amplitude, d.mu_c, delta, mean_sq, consts);
    (r.rate, r.out_of_regime)
}

fn infeasible(reason: impl Into<String>, derived: Option<DerivedParams>, device: Device) -> Evaluation {
    Evaluation { outcome: Outcome::Infeasible { reason: reason.into() }, derived, device }
}

/// Scores one device. Pure; constraint violations come back as [`Outcome::Infeasible`].
pub fn evaluate(fom: FigureOfMerit, device: &Device, constraints: &Constraints, consts: &PhysicalConstants) -> Evaluation {
    let mut dev = *device;
    if let Some(rho) = constraints.magnet_density {
        dev.cantilever.tip_mass = constraints.paddle_mass + rho * dev.magnet.volume();
    }
    dev.magnet.gradient_cap = constraints.cap_rule.cap(&dev, consts);
    if let Some(min) = constraints.distance_min {
        if dev.trap.distance < min {
            return infeasible(format!("distance {:e} m below minimum {:e} m", dev.trap.distance, min), None, dev);
        }
    }
    let d = match dev.derive(consts) {
        Ok(d) => d,
        Err(e) => return infeasible(e.to_string(), None, dev),
    };
    let score = match fom {
        FigureOfMerit::ProbeSnr => {
            if !(d.temperature > 0.0) {
                return infeasible("probe score needs a positive temperature", Some(d), dev);
            }
            if !(d.gamma > 0.0) {
                return infeasible("probe score unbounded for zero atom loss", Some(d), dev);
            }
            let (rate, out_of_regime) = probe_rate(&d, consts);
            if constraints.weak_coupling && out_of_regime {
                return infeasible("hbar*Omega_R >= mu_c at the thermal amplitude", Some(d), dev);
            }
            rate / d.gamma
        }
        _ => match score_from_rates(fom, d.g, d.kappa, d.gamma, d.atom_number) {
            Some(s) => s,
            None => return infeasible("kappa + gamma = 0, score unbounded", Some(d), dev),
        },
    };
    if !score.is_finite() {
        return infeasible("non-finite score", Some(d), dev);
    }
    Evaluation { outcome: Outcome::Feasible { score }, derived: Some(d), device: dev }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Grid points per free axis.
    pub grid_points: usize,
    /// Total evaluations, grid included.
    pub max_evaluations: usize,
    /// Smallest coordinate-descent step in normalized units.
    pub min_step: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { grid_points: 9, max_evaluations: 2000, min_step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Grid,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub index: usize,
    pub phase: Phase,
    pub point: Vec<f64>,
    pub outcome: Outcome,
    /// Became the incumbent best.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_point: Vec<f64>,
    pub best_score: f64,
    pub trace: Vec<TraceEntry>,
}

impl SearchResult {
    /// Scores of the accepted entries, in order.
    pub fn accepted_scores(&self) -> Vec<f64> {
        self.trace.iter().filter(|e| e.accepted).filter_map(|e| e.outcome.score()).collect()
    }
}

struct Searcher<'a, F> {
    axes: &'a [Axis],
    objective: F,
    trace: Vec<TraceEntry>,
    best: Option<(Vec<f64>, f64)>,
    max_evaluations: usize,
}

impl<F: Fn(&[f64]) -> Outcome + Sync> Searcher<'_, F> {
    fn point(&self, u: &[f64]) -> Vec<f64> {
        self.axes.iter().zip(u).map(|(a, &x)| a.value(x)).collect()
    }

    fn record(&mut self, phase: Phase, u: Vec<f64>, point: Vec<f64>, outcome: Outcome) -> bool {
        let better = match (outcome.score(), &self.best) {
            (Some(s), None) => s.is_finite(),
            (Some(s), Some((_, b))) => s > *b,
            (None, _) => false,
        };
        if better {
            self.best = Some((u, outcome.score().unwrap()));
        }
        self.trace.push(TraceEntry { index: self.trace.len(), phase, point, outcome, accepted: better });
        better
    }

    fn remaining(&self) -> usize {
        self.max_evaluations - self.trace.len()
    }
}

/// Maximizes `objective` over the box spanned by `axes`.
///
/// Deterministic in (`axes`, `budget`, `seed`): grid candidates are evaluated
/// in parallel but recorded in grid order, and the coordinate order of each
/// refinement sweep is drawn from the seeded generator.
pub fn search<F>(axes: &[Axis], objective: F, budget: &SearchBudget, seed: u64) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> Outcome + Sync,
{
    if axes.is_empty() {
        return Err(Error::invalid("optimize.axes", "at least one axis is required"));
    }
    for a in axes {
        a.validate()?;
    }
    if budget.max_evaluations < 1 || budget.grid_points < 1 {
        return Err(Error::invalid("optimize.budget", "need at least one evaluation and one grid point"));
    }
    if !(budget.min_step > 0.0) {
        return Err(Error::invalid("optimize.min_step", "must be > 0"));
    }
    let free: Vec<usize> = (0..axes.len()).filter(|&i| !axes[i].is_fixed()).collect();
    let per_axis = budget.grid_points;
    let grid_size = per_axis.checked_pow(free.len() as u32).filter(|&n| n <= budget.max_evaluations);
    let Some(grid_size) = grid_size else {
        return Err(Error::invalid("optimize.budget", "grid does not fit in max_evaluations"));
    };

    let coord = |i: usize| if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
    let grid_u: Vec<Vec<f64>> = (0..grid_size)
        .map(|mut idx| {
            let mut u = vec![0.5; axes.len()];
            for &ax in free.iter().rev() {
                u[ax] = coord(idx % per_axis);
                idx /= per_axis;
            }
            u
        })
        .collect();

    let mut s = Searcher { axes, objective, trace: Vec::new(), best: None, max_evaluations: budget.max_evaluations };
    let evaluated: Vec<(Vec<f64>, Outcome)> = grid_u
        .par_iter()
        .map(|u| {
            let p = s.point(u);
            let o = (s.objective)(&p);
            (p, o)
        })
        .collect();
    for (u, (p, o)) in grid_u.into_iter().zip(evaluated) {
        s.record(Phase::Grid, u, p, o);
    }
    if s.best.is_none() {
        return Err(Error::NoFeasiblePoint);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut step = if per_axis > 1 { 0.5 / (per_axis - 1) as f64 } else { 0.25 };
    let mut order = free.clone();
    while step >= budget.min_step && s.remaining() > 0 && !free.is_empty() {
        order.shuffle(&mut rng);
        let mut improved = false;
        for &ax in &order {
            for dir in [1.0, -1.0] {
                if s.remaining() == 0 {
                    break;
                }
                let mut u = s.best.as_ref().unwrap().0.clone();
                let moved = (u[ax] + dir * step).clamp(0.0, 1.0);
                if moved == u[ax] {
                    continue;
                }
                u[ax] = moved;
                let p = s.point(&u);
                let o = (s.objective)(&p);
                if s.record(Phase::Refine, u, p, o) {
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    let (u, score) = s.best.clone().unwrap();
    Ok(SearchResult { best_point: s.point(&u), best_score: score, trace: s.trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub search: SearchResult,
    pub best: Evaluation,
}

/// Searches `axes` around `base` for the best `fom` under `constraints`.
pub fn optimize(
    fom: FigureOfMerit,
    base: &Device,
    axes: &[Axis],
    constraints: &Constraints,
    budget: &SearchBudget,
    seed: u64,
    consts: &PhysicalConstants,
) -> Result<OptimizationResult> {
    let build = |point: &[f64]| {
        let mut d = *base;
        for (a, &v) in axes.iter().zip(point) {
            a.knob.apply(&mut d, v);
        }
        d
    };
    let result = search(axes, |p| evaluate(fom, &build(p), constraints, consts).outcome, budget, seed)?;
    let best = evaluate(fom, &build(&result.best_point), constraints, consts);
    Ok(OptimizationResult { search: result, best })
}
