//! Using the condensate to drive or cool the resonator mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::master::{evolve_master, MasterOptions};
use super::mcwf::{evolve_mcwf, McwfInitial, McwfOptions};
use super::model::ModelParams;
use super::operators::{build_operators, HilbertConfig};
use super::record::TrajectoryRecord;
use super::state::{basis_state, spin_thermal_density, thermal_state};

/// Initial collective spin state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinPreparation {
    /// |S, +S⟩: every atom in |1⟩.
    AllUp,
    /// |S, −S⟩: every atom in |0⟩.
    AllDown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Master(MasterOptions),
    Mcwf { trajectories: usize, seed: u64, options: McwfOptions },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCoolConfig {
    pub hilbert: HilbertConfig,
    pub engine: Engine,
    /// End of the run; defaults to three transfer times π/2g√N.
    pub t_end: Option<f64>,
    pub points: usize,
    /// Initial thermal phonon occupancy; defaults to the bath n_th.
    pub initial_occupancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCoolSummary {
    pub preparation: SpinPreparation,
    pub initial_mean_n: f64,
    pub n_th: f64,
    /// Minimum ⟨n⟩ for [`SpinPreparation::AllDown`], maximum for `AllUp`.
    pub extremum_mean_n: f64,
    pub extremum_time: f64,
    /// π / (2 g √N)
    pub transfer_time: f64,
    /// extremum_time / transfer_time
    pub time_ratio: f64,
    pub warnings: Vec<String>,
}

pub fn transfer_time(g: f64, atom_count: u32) -> f64 {
    std::f64::consts::PI / (2.0 * g.abs() * (atom_count as f64).sqrt())
}

/// Prepares |S, ±S⟩ ⊗ thermal(n_0), evolves it, and locates the extremum of ⟨n⟩.
pub fn drive_cool_scenario(
    preparation: SpinPreparation,
    params: &ModelParams,
    cfg: &DriveCoolConfig,
) -> Result<(TrajectoryRecord, DriveCoolSummary)> {
    let hilbert = &cfg.hilbert;
    let ops = build_operators(hilbert)?;
    let n_atoms = hilbert.atom_count;
    let t_transfer = transfer_time(params.g, n_atoms);
    let t_end = match cfg.t_end {
        Some(t) => t,
        None if t_transfer.is_finite() => 3.0 * t_transfer,
        None => return Err(Error::invalid("t_end", "required when g = 0")),
    };
    if !(t_end > 0.0) || cfg.points < 2 {
        return Err(Error::invalid("t_end/points", "need t_end > 0 and at least two points"));
    }
    let mut warnings = Vec::new();
    if params.n_th > 0.1 * n_atoms as f64 {
        warnings.push(format!(
            "regime: n_th = {} is not much smaller than N = {}; the cooling limit <n> << n_th is only approached",
            params.n_th, n_atoms
        ));
    }

    let n0 = cfg.initial_occupancy.unwrap_or(params.n_th);
    let phonons = thermal_state(n0, hilbert.fock_cutoff, hilbert.truncation_tolerance)?;
    let spin_level = match preparation {
        SpinPreparation::AllUp => n_atoms as usize,
        SpinPreparation::AllDown => 0,
    };
    let t_grid: Vec<f64> = (0..cfg.points).map(|i| t_end * i as f64 / (cfg.points - 1) as f64).collect();

    let record = match cfg.engine {
        Engine::Master(opts) => {
            let rho0 = spin_thermal_density(hilbert, spin_level, &phonons);
            evolve_master(&rho0, params, &ops, &t_grid, &opts)?
        }
        Engine::Mcwf { trajectories, seed, options } => {
            let members: Vec<(f64, Vec<Complex64>)> = phonons
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(n, &p)| (p, basis_state(hilbert, spin_level, n)))
                .collect();
            let total: f64 = members.iter().map(|(p, _)| p).sum();
            let members = members.into_iter().map(|(p, v)| (p / total, v)).collect();
            evolve_mcwf(&McwfInitial::Mixture(members), params, &ops, &t_grid, trajectories, seed, &options)?
        }
    };

    let n = record.mean_n();
    let pick = |better: fn(f64, f64) -> bool| {
        let mut best = 0;
        for i in 1..n.len() {
            if better(n[i], n[best]) {
                best = i;
            }
        }
        best
    };
    let idx = match preparation {
        SpinPreparation::AllUp => pick(|a, b| a > b),
        SpinPreparation::AllDown => pick(|a, b| a < b),
    };
    warnings.extend(record.warnings.iter().cloned());
    let summary = DriveCoolSummary {
        preparation,
        initial_mean_n: n[0],
        n_th: params.n_th,
        extremum_mean_n: n[idx],
        extremum_time: record.times[idx],
        transfer_time: t_transfer,
        time_ratio: record.times[idx] / t_transfer,
        warnings,
    };
    Ok((record, summary))
}
