//! Monte Carlo wavefunction unraveling of the master equation.
//!
//! Each trajectory evolves an unnormalized state under H_eff until its squared
//! norm falls to a uniformly drawn threshold, then applies a jump chosen with
//! probability ∝ r_k ‖L_k ψ‖². Trajectory `i` draws from ChaCha stream `i` of
//! the run seed, so the averaged record does not depend on thread scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrate::{Dopri5, Tolerances};

use super::master::{breakpoints_between, validate_grid};
use super::model::{Generator, ModelParams};
use super::operators::Operators;
use super::record::{EngineKind, ObservableSeries, Sample, TrajectoryRecord};

/// Initial condition for the trajectory ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum McwfInitial {
    Pure(Vec<Complex64>),
    /// Statistical mixture of pure states; each trajectory samples one member.
    Mixture(Vec<(f64, Vec<Complex64>)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McwfOptions {
    pub tolerances: Tolerances,
    /// Relative precision of the jump-time bisection.
    pub jump_time_rtol: f64,
}

impl Default for McwfOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), jump_time_rtol: 1e-10 }
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn populations(psi: &[Complex64]) -> Vec<f64> {
    psi.iter().map(|z| z.norm_sqr()).collect()
}

struct TrajectoryOutput {
    samples: Vec<[f64; 4]>,
    max_leak: f64,
    jumps: u64,
}

struct Runner<'a> {
    gen: &'a Generator,
    ops: &'a Operators,
    params: &'a ModelParams,
    t_grid: &'a [f64],
    opts: McwfOptions,
    h0: f64,
}

impl Runner<'_> {
    fn leak(&self, psi: &[Complex64]) -> f64 {
        let n_max = self.ops.cfg.fock_cutoff;
        let total = norm_sqr(psi);
        let top: f64 = psi
            .iter()
            .zip(self.ops.phonon_numbers())
            .filter(|(_, &n)| n == n_max)
            .map(|(z, _)| z.norm_sqr())
            .sum();
        top / total
    }

    fn jump(&self, psi: &mut Vec<Complex64>, rng: &mut ChaCha8Rng, t: f64) -> Result<()> {
        let dim = psi.len();
        let mut candidates = Vec::with_capacity(self.gen.collapse_ops().len());
        let mut total = 0.0;
        for c in self.gen.collapse_ops() {
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            c.op.mul_vec_acc(Complex64::new(1.0, 0.0), psi, &mut out);
            let w = c.rate * norm_sqr(&out);
            total += w;
            candidates.push((w, out));
        }
        if !(total > 0.0) {
            return Err(Error::Numerical(format!("jump selection degenerate at t = {t:e}: all jump rates vanish")));
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = candidates.len() - 1;
        for (i, (w, _)) in candidates.iter().enumerate() {
            if pick < *w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        let mut next = std::mem::take(&mut candidates[chosen].1);
        let norm = norm_sqr(&next).sqrt();
        next.iter_mut().for_each(|z| *z /= norm);
        *psi = next;
        Ok(())
    }

    fn run(&self, mut psi: Vec<Complex64>, rng: &mut ChaCha8Rng) -> Result<TrajectoryOutput> {
        let dim = psi.len();
        let dissipative = !self.gen.collapse_ops().is_empty();
        let mut solver = Dopri5::new(dim, self.opts.tolerances);
        let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| self.gen.apply_effective(t, y, dy);
        let mut threshold = 1.0 - rng.random::<f64>();
        let mut out = TrajectoryOutput { samples: Vec::with_capacity(self.t_grid.len()), max_leak: self.leak(&psi), jumps: 0 };
        let mut t = self.t_grid[0];
        let mut h = self.h0;
        let mut y_new = vec![Complex64::new(0.0, 0.0); dim];

        for &target in self.t_grid {
            let stops: Vec<f64> = breakpoints_between(self.params, t, target).chain(std::iter::once(target)).collect();
            for stop in stops {
                while t < stop {
                    let remaining = stop - t;
                    let clipped = h >= remaining;
                    let h_try = if clipped { remaining } else { h };
                    let err = solver.try_step(&mut rhs, t, &psi, h_try, &mut y_new);
                    if !err.is_finite() {
                        return Err(Error::Numerical(format!("non-finite error estimate at t = {t:e}")));
                    }
                    if err > 1.0 {
                        h = Dopri5::next_h(h_try, err).min(h_try);
                        if h < solver.tol.h_min * (1.0 + t.abs()) {
                            return Err(Error::StepUnderflow { t, h });
                        }
                        continue;
                    }
                    let proposal = Dopri5::next_h(h_try, err);
                    if dissipative && norm_sqr(&y_new) < threshold {
                        // locate the crossing inside [t, t + h_try]
                        let (mut lo, mut hi) = (0.0, h_try);
                        let resolution = self.opts.jump_time_rtol * (t.abs() + h_try);
                        let mut iterations = 0;
                        while hi - lo > resolution && iterations < 200 {
                            let mid = 0.5 * (lo + hi);
                            solver.try_step(&mut rhs, t, &psi, mid, &mut y_new);
                            if norm_sqr(&y_new) < threshold {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                            iterations += 1;
                        }
                        solver.try_step(&mut rhs, t, &psi, hi, &mut y_new);
                        std::mem::swap(&mut psi, &mut y_new);
                        t = if clipped && hi == h_try { stop } else { t + hi };
                        self.jump(&mut psi, rng, t)?;
                        out.jumps += 1;
                        threshold = 1.0 - rng.random::<f64>();
                    } else {
                        std::mem::swap(&mut psi, &mut y_new);
                        t = if clipped { stop } else { t + h_try };
                        if !clipped || proposal < h {
                            h = proposal;
                        }
                    }
                    out.max_leak = out.max_leak.max(self.leak(&psi));
                }
            }
            out.samples.push(Sample::from_populations(&populations(&psi), self.ops).as_array());
        }
        Ok(out)
    }
}

/// Averages `n_traj` quantum trajectories and samples observables on `t_grid`.
pub fn evolve_mcwf(
    initial: &McwfInitial,
    params: &ModelParams,
    ops: &Operators,
    t_grid: &[f64],
    n_traj: usize,
    seed: u64,
    opts: &McwfOptions,
) -> Result<TrajectoryRecord> {
    if n_traj < 1 {
        return Err(Error::Domain("at least one trajectory is required".into()));
    }
    validate_grid(t_grid)?;
    let dim = ops.dim();
    let members: Vec<(f64, Vec<Complex64>)> = match initial {
        McwfInitial::Pure(psi) => vec![(1.0, psi.clone())],
        McwfInitial::Mixture(m) => m.clone(),
    };
    if members.is_empty() {
        return Err(Error::Domain("initial mixture is empty".into()));
    }
    let weight_sum: f64 = members.iter().map(|(w, _)| *w).sum();
    for (w, psi) in &members {
        if psi.len() != dim {
            return Err(Error::Domain(format!("initial state has dimension {}, operators {}", psi.len(), dim)));
        }
        if !(*w >= 0.0) || ((norm_sqr(psi) - 1.0).abs() > 1e-9) {
            return Err(Error::Domain("initial states must be normalized with nonnegative weights".into()));
        }
    }
    if (weight_sum - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("mixture weights sum to {weight_sum}, expected 1")));
    }

    let gen = Generator::new(params, ops)?;
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    let runner = Runner {
        gen: &gen,
        ops,
        params,
        t_grid,
        opts: *opts,
        h0: (0.1 / gen.rate_scale().max(1e-300)).min(span).max(1e-12),
    };

    let outputs: Vec<Result<TrajectoryOutput>> = (0..n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let psi0 = if members.len() == 1 {
                members[0].1.clone()
            } else {
                let mut u = rng.random::<f64>() * weight_sum;
                let mut pick = members.len() - 1;
                for (i, (w, _)) in members.iter().enumerate() {
                    if u < *w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                members[pick].1.clone()
            };
            runner.run(psi0, &mut rng)
        })
        .collect();

    // Reduce in trajectory-index order.
    let outputs: Vec<TrajectoryOutput> = outputs.into_iter().collect::<Result<_>>()?;
    let points = t_grid.len();
    let n = n_traj as f64;
    let mut mean = ObservableSeries::default();
    let mut stderr = ObservableSeries::default();
    // shifted by the first trajectory so identical trajectories give exactly zero spread
    for p in 0..points {
        let x0 = outputs[0].samples[p];
        let mut sum = [0.0; 4];
        let mut sum_sq = [0.0; 4];
        for out in &outputs {
            for k in 0..4 {
                let d = out.samples[p][k] - x0[k];
                sum[k] += d;
                sum_sq[k] += d * d;
            }
        }
        let mut m = [0.0; 4];
        let mut e = [0.0; 4];
        for k in 0..4 {
            m[k] = x0[k] + sum[k] / n;
            if n_traj > 1 {
                let var = ((sum_sq[k] - sum[k] * sum[k] / n) / (n - 1.0)).max(0.0);
                e[k] = (var / n).sqrt();
            }
        }
        mean.push_array(m);
        stderr.push_array(e);
    }
    let max_leak = outputs.iter().map(|o| o.max_leak).fold(0.0, f64::max);
    let jumps = outputs.iter().map(|o| o.jumps).sum();

    let mut record = TrajectoryRecord {
        engine: EngineKind::Mcwf,
        times: t_grid.to_vec(),
        observables: mean,
        stderr: Some(stderr),
        trajectory_count: n_traj,
        seed: Some(seed),
        max_cutoff_leak: max_leak,
        truncation_tolerance: ops.cfg.truncation_tolerance,
        truncation_flagged: false,
        jump_count: jumps,
        warnings: params.warnings(ops.cfg.atom_count),
    };
    record.finish();
    Ok(record)
}
