use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrate::{Dopri5, Tolerances};

use super::model::{Generator, ModelParams};
use super::operators::Operators;
use super::record::{EngineKind, ObservableSeries, Sample, TrajectoryRecord};
use super::state::{hermiticity_error, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    pub tolerances: Tolerances,
    /// Largest Hilbert dimension accepted (the density operator is D×D).
    pub max_dim: usize,
    /// Trace or Hermiticity drift per step beyond which integration fails.
    pub drift_tolerance: f64,
    /// Most negative population tolerated.
    pub positivity_tolerance: f64,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_dim: 400,
            drift_tolerance: 1e-6,
            positivity_tolerance: 1e-8,
        }
    }
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be finite and non-decreasing".into()));
    }
    Ok(())
}

/// Stop times between `t0` and `t1` (exclusive) where the generator changes.
pub(crate) fn breakpoints_between(params: &ModelParams, t0: f64, t1: f64) -> impl Iterator<Item = f64> + '_ {
    params.breakpoints().iter().copied().filter(move |&b| b > t0 && b < t1)
}

/// Integrates the Lindblad master equation and samples observables on `t_grid`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    params: &ModelParams,
    ops: &Operators,
    t_grid: &[f64],
    opts: &MasterOptions,
) -> Result<TrajectoryRecord> {
    evolve_master_state(rho0, params, ops, t_grid, opts).map(|(record, _)| record)
}

/// As [`evolve_master`], also returning the density operator at the last grid time.
pub fn evolve_master_state(
    rho0: &DensityMatrix,
    params: &ModelParams,
    ops: &Operators,
    t_grid: &[f64],
    opts: &MasterOptions,
) -> Result<(TrajectoryRecord, DensityMatrix)> {
    let dim = ops.dim();
    if dim > opts.max_dim {
        return Err(Error::Resource { dim, max: opts.max_dim });
    }
    if rho0.dim() != dim {
        return Err(Error::Domain(format!("initial state has dimension {}, operators {}", rho0.dim(), dim)));
    }
    validate_grid(t_grid)?;
    let tr = rho0.trace();
    if (tr - 1.0).norm() > opts.drift_tolerance || rho0.hermiticity_error() > opts.drift_tolerance {
        return Err(Error::Domain("initial density operator must be Hermitian with unit trace".into()));
    }

    let gen = Generator::new(params, ops)?;
    let mut record = TrajectoryRecord {
        engine: EngineKind::Master,
        times: Vec::with_capacity(t_grid.len()),
        observables: ObservableSeries::default(),
        stderr: None,
        trajectory_count: 1,
        seed: None,
        max_cutoff_leak: 0.0,
        truncation_tolerance: ops.cfg.truncation_tolerance,
        truncation_flagged: false,
        jump_count: 0,
        warnings: params.warnings(ops.cfg.atom_count),
    };

    let mut rho: Vec<Complex64> = rho0.data().to_vec();
    let mut t = t_grid[0];
    let mut h = (0.1 / gen.rate_scale().max(1e-300)).min(t_grid[t_grid.len() - 1] - t).max(1e-12);
    let mut solver = Dopri5::new(dim * dim, opts.tolerances);
    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| gen.apply_lindblad(t, y, dy);

    let pops = |rho: &[Complex64]| (0..dim).map(|i| rho[i * dim + i].re).collect::<Vec<_>>();
    let first = Sample::from_populations(&pops(&rho), ops);
    record.max_cutoff_leak = first.cutoff_leak;

    let mut max_leak = first.cutoff_leak;
    let drift = opts.drift_tolerance;
    let pos_tol = opts.positivity_tolerance;
    let mut guard = |t: f64, rho: &mut Vec<Complex64>| -> Result<()> {
        let tr: Complex64 = (0..dim).map(|i| rho[i * dim + i]).sum();
        if (tr - 1.0).norm() > drift {
            return Err(Error::Numerical(format!("trace drift {:.3e} at t = {t:e}", (tr - 1.0).norm())));
        }
        let herm = hermiticity_error(dim, rho);
        if herm > drift {
            return Err(Error::Numerical(format!("hermiticity drift {herm:.3e} at t = {t:e}")));
        }
        let inv = 1.0 / tr.re;
        for i in 0..dim {
            for j in i..dim {
                let a = rho[i * dim + j];
                let b = rho[j * dim + i];
                let avg = (a + b.conj()) * (0.5 * inv);
                rho[i * dim + j] = avg;
                rho[j * dim + i] = avg.conj();
            }
        }
        let mut leak = 0.0;
        for (i, &n) in ops.phonon_numbers().iter().enumerate() {
            let p = rho[i * dim + i].re;
            if p < -pos_tol {
                return Err(Error::Numerical(format!("negative population {p:.3e} at t = {t:e}")));
            }
            if n == ops.cfg.fock_cutoff {
                leak += p;
            }
        }
        max_leak = max_leak.max(leak);
        Ok(())
    };

    for &target in t_grid {
        let stops: Vec<f64> = breakpoints_between(params, t, target).chain(std::iter::once(target)).collect();
        for stop in stops {
            if stop > t {
                solver.advance(&mut rhs, &mut t, &mut rho, stop, &mut h, &mut guard)?;
            }
        }
        record.times.push(target);
        record.observables.push(&Sample::from_populations(&pops(&rho), ops));
    }
    record.max_cutoff_leak = max_leak;
    record.finish();
    Ok((record, DensityMatrix::from_data(dim, rho)?))
}
