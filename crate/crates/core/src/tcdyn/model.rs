//! Tavis-Cummings Hamiltonian in the frame rotating at ω_L, and the Lindblad
//! generator built on top of it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

use super::operators::Operators;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Piecewise-constant detuning: `deltas[i]` applies on `[times[i], times[i+1])`.
/// Before `times[0]` the model's base detuning applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSchedule {
    pub times: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl DeltaSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.deltas.len() || self.times.is_empty() {
            return Err(Error::invalid("delta_schedule", "times and deltas must be non-empty and of equal length"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("delta_schedule.times", "must be strictly increasing"));
        }
        if self.times.iter().chain(&self.deltas).any(|v| !v.is_finite()) {
            return Err(Error::invalid("delta_schedule", "values must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Single-atom coupling g, rad/s.
    pub g: f64,
    /// δ = ω_r − ω_L, rad/s.
    pub delta: f64,
    /// Amplitude damping rate κ of the resonator, rad/s.
    pub kappa: f64,
    pub n_th: f64,
    /// Atomic loss γ, 1/s.
    pub gamma_atom: f64,
    pub delta_schedule: Option<DeltaSchedule>,
    /// Lab-frame resonator frequency, used only for the RWA validity check.
    pub omega_r: Option<f64>,
}

impl ModelParams {
    pub fn closed(g: f64, delta: f64) -> Self {
        Self { g, delta, kappa: 0.0, n_th: 0.0, gamma_atom: 0.0, delta_schedule: None, omega_r: None }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("delta", self.delta)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, v) in [("kappa", self.kappa), ("n_th", self.n_th), ("gamma_atom", self.gamma_atom)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, "must be >= 0"));
            }
        }
        if let Some(s) = &self.delta_schedule {
            s.validate()?;
        }
        Ok(())
    }

    pub fn delta_at(&self, t: f64) -> f64 {
        match &self.delta_schedule {
            Some(s) => match s.times.iter().rposition(|&ts| ts <= t) {
                Some(i) => s.deltas[i],
                None => self.delta,
            },
            None => self.delta,
        }
    }

    /// Times at which δ(t) jumps.
    pub fn breakpoints(&self) -> &[f64] {
        self.delta_schedule.as_ref().map_or(&[], |s| &s.times)
    }

    /// Regime warnings for these parameters on `atom_count` atoms.
    pub fn warnings(&self, atom_count: u32) -> Vec<String> {
        let mut w = Vec::new();
        if let Some(omega_r) = self.omega_r {
            let ratio = self.g * (atom_count as f64).sqrt() / omega_r;
            if ratio > 1e-2 {
                w.push(format!("rwa: g*sqrt(N)/omega_r = {ratio:.3e} exceeds 1e-2; counter-rotating terms are neglected"));
            }
        }
        if self.gamma_atom > 0.0 {
            w.push(
                "atom-loss: modeled as a collective de-excitation channel S-/sqrt(2S) at fixed S; \
                 atom-number-changing loss is not represented"
                    .to_string(),
            );
        }
        w
    }
}

/// H/ħ = δ a†a + g (S⁺a + S⁻a†), in rad/s.
pub fn hamiltonian(params: &ModelParams, ops: &Operators) -> CsrMatrix {
    hamiltonian_at(params.delta, params.g, ops)
}

fn coupling_operator(ops: &Operators) -> CsrMatrix {
    let sa = ops.s_plus.matmul(&ops.a);
    sa.add_scaled(&sa.transpose(), 1.0)
}

fn hamiltonian_at(delta: f64, g: f64, ops: &Operators) -> CsrMatrix {
    ops.number.scale(delta).add_scaled(&coupling_operator(ops), g)
}

#[derive(Debug, Clone)]
pub struct Collapse {
    pub name: &'static str,
    pub rate: f64,
    pub op: CsrMatrix,
    pub op_t: CsrMatrix,
}

/// Precomputed pieces of the master-equation generator
/// dρ/dt = −i[H,ρ] + Σ_k r_k D[L_k]ρ.
#[derive(Debug, Clone)]
pub struct Generator {
    params: ModelParams,
    number: CsrMatrix,
    coupling: CsrMatrix,
    /// Σ r_k L_k†L_k
    decay: CsrMatrix,
    collapse: Vec<Collapse>,
    dim: usize,
}

impl Generator {
    pub fn new(params: &ModelParams, ops: &Operators) -> Result<Self> {
        params.validate()?;
        let dim = ops.dim();
        let n = ops.cfg.atom_count as f64;
        let mut collapse = Vec::new();
        let mut push = |name, rate: f64, op: CsrMatrix| {
            if rate > 0.0 {
                let op_t = op.transpose();
                collapse.push(Collapse { name, rate, op, op_t });
            }
        };
        // κ is the amplitude rate, so the energy relaxes at 2κ.
        push("resonator-loss", 2.0 * params.kappa * (params.n_th + 1.0), ops.a.clone());
        push("resonator-heating", 2.0 * params.kappa * params.n_th, ops.a_dag.clone());
        push("atom-loss", params.gamma_atom, ops.s_minus.scale(1.0 / n.sqrt()));

        let mut decay = CsrMatrix::zeros(dim, dim);
        for c in &collapse {
            decay = decay.add_scaled(&c.op_t.matmul(&c.op), c.rate);
        }
        Ok(Self {
            params: params.clone(),
            number: ops.number.clone(),
            coupling: coupling_operator(ops),
            decay,
            collapse,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn collapse_ops(&self) -> &[Collapse] {
        &self.collapse
    }

    pub fn hamiltonian_at(&self, t: f64) -> CsrMatrix {
        self.number.scale(self.params.delta_at(t)).add_scaled(&self.coupling, self.params.g)
    }

    /// Crude bound on the fastest rate in the generator, for initial step sizes.
    pub fn rate_scale(&self) -> f64 {
        let delta_max = std::iter::once(self.params.delta)
            .chain(self.params.breakpoints().iter().map(|&t| self.params.delta_at(t)))
            .fold(0.0f64, |m, d| m.max(d.abs()));
        delta_max * self.number.norm_inf() + self.params.g.abs() * self.coupling.norm_inf() + self.decay.norm_inf()
    }

    /// dψ/dt = −i H_eff ψ with H_eff = H − (i/2) Σ r_k L_k†L_k.
    pub fn apply_effective(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        self.number.mul_vec_acc(-I * self.params.delta_at(t), psi, out);
        self.coupling.mul_vec_acc(-I * self.params.g, psi, out);
        self.decay.mul_vec_acc(Complex64::new(-0.5, 0.0), psi, out);
    }

    /// Writes dρ/dt into `out` for the row-major density operator `rho`.
    pub fn apply_lindblad(&self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        let delta = self.params.delta_at(t);
        let g = self.params.g;
        let half = Complex64::new(-0.5, 0.0);

        // Row blocks are independent for the left products; the right products
        // read full rows of rho, so both can be split by output row.
        out.par_chunks_mut(d * ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            let r0 = b * ROW_BLOCK;
            let rows = chunk.len() / d;
            chunk.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for local in 0..rows {
                let r = r0 + local;
                let out_row = &mut chunk[local * d..(local + 1) * d];
                // left products: (A ρ)[r, :] = Σ_k A[r,k] ρ[k,:]
                for (k, v) in self.number.row(r) {
                    axpy(out_row, -I * (delta * v), &rho[k * d..(k + 1) * d]);
                }
                for (k, v) in self.coupling.row(r) {
                    axpy(out_row, -I * (g * v), &rho[k * d..(k + 1) * d]);
                }
                for (k, v) in self.decay.row(r) {
                    axpy(out_row, half * v, &rho[k * d..(k + 1) * d]);
                }
                // right products: (ρ A)[r, :] = Σ_k ρ[r,k] A[k,:]
                let rho_row = &rho[r * d..(r + 1) * d];
                for (k, &x) in rho_row.iter().enumerate() {
                    if x.re == 0.0 && x.im == 0.0 {
                        continue;
                    }
                    let hx = I * x;
                    for (j, v) in self.number.row(k) {
                        out_row[j] += hx * (delta * v);
                    }
                    for (j, v) in self.coupling.row(k) {
                        out_row[j] += hx * (g * v);
                    }
                    let dx = half * x;
                    for (j, v) in self.decay.row(k) {
                        out_row[j] += dx * v;
                    }
                }
                // jump terms: r_k (L ρ L^T)[r, :] = r_k Σ_{p} L[r,p] Σ_q ρ[p,q] L[j,q]
                for c in &self.collapse {
                    for (p, lv) in c.op.row(r) {
                        let s = c.rate * lv;
                        let rho_p = &rho[p * d..(p + 1) * d];
                        for (q, &x) in rho_p.iter().enumerate() {
                            if x.re == 0.0 && x.im == 0.0 {
                                continue;
                            }
                            // (ρ Lᵀ)[p, j] = Σ_q ρ[p,q] L[j,q]; L[j,q] = Lᵀ[q,j]
                            for (j, tv) in c.op_t.row(q) {
                                out_row[j] += x * (s * tv);
                            }
                        }
                    }
                }
            }
        });
    }
}

const ROW_BLOCK: usize = 8;

#[inline]
fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// dρ/dt for the given parameters; convenience wrapper over [`Generator`].
pub fn lindblad_rhs(rho: &[Complex64], params: &ModelParams, ops: &Operators) -> Result<Vec<Complex64>> {
    let gen = Generator::new(params, ops)?;
    let mut out = vec![Complex64::new(0.0, 0.0); rho.len()];
    gen.apply_lindblad(0.0, rho, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tcdyn::operators::{build_operators, HilbertConfig};
    use crate::tcdyn::state::{spin_thermal_density, thermal_state, DensityMatrix};

    fn reference_lindblad(gen: &Generator, rho: &[Complex64], d: usize) -> Vec<Complex64> {
        // straightforward dense evaluation for cross-checking the fused kernel
        let h = gen.hamiltonian_at(0.0).to_dense();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        let mul = |a: &Vec<Vec<f64>>, x: &[Complex64], left: bool| {
            let mut y = vec![Complex64::new(0.0, 0.0); d * d];
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        y[i * d + j] += if left { x[k * d + j] * a[i][k] } else { x[i * d + k] * a[k][j] };
                    }
                }
            }
            y
        };
        let hr = mul(&h, rho, true);
        let rh = mul(&h, rho, false);
        for i in 0..d * d {
            out[i] = -I * (hr[i] - rh[i]);
        }
        for c in gen.collapse_ops() {
            let l = c.op.to_dense();
            let lt = c.op_t.to_dense();
            let ltl = c.op_t.matmul(&c.op).to_dense();
            let lrl = mul(&lt, &mul(&l, rho, true), false);
            let a = mul(&ltl, rho, true);
            let b = mul(&ltl, rho, false);
            for i in 0..d * d {
                out[i] += (lrl[i] - (a[i] + b[i]) * 0.5) * c.rate;
            }
        }
        out
    }

    #[test]
    fn hamiltonian_trivial_and_hermitian() {
        let ops = build_operators(&HilbertConfig::new(3, 4)).unwrap();
        assert_eq!(hamiltonian(&ModelParams::closed(0.0, 0.0), &ops).nnz(), 0);
        let h = hamiltonian(&ModelParams::closed(1.3, -0.4), &ops);
        assert!(h.is_symmetric(0.0));
    }

    #[test]
    fn excitation_number_commutes() {
        let ops = build_operators(&HilbertConfig::new(5, 7)).unwrap();
        let h = hamiltonian(&ModelParams::closed(0.9, 0.3), &ops);
        let exc = ops.number.add_scaled(&ops.sz, 1.0);
        assert!(h.commutator(&exc).max_abs() < 1e-12);
    }

    #[test]
    fn fused_kernel_matches_dense_reference() {
        let cfg = HilbertConfig::new(2, 3);
        let ops = build_operators(&cfg).unwrap();
        let params = ModelParams { g: 0.7, delta: 0.2, kappa: 0.3, n_th: 0.4, gamma_atom: 0.25, delta_schedule: None, omega_r: None };
        let gen = Generator::new(&params, &ops).unwrap();
        let d = cfg.dim();
        // a generic Hermitian matrix
        let mut rho = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let v = Complex64::new(((i * 7 + j * 3) % 5) as f64 * 0.1, (i as f64 - j as f64) * 0.05);
                rho[i * d + j] += v;
                rho[j * d + i] += v.conj();
            }
        }
        let mut fast = vec![Complex64::new(0.0, 0.0); d * d];
        gen.apply_lindblad(0.0, &rho, &mut fast);
        let slow = reference_lindblad(&gen, &rho, d);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn rhs_is_traceless() {
        let cfg = HilbertConfig::new(3, 12);
        let ops = build_operators(&cfg).unwrap();
        let params = ModelParams { g: 1.0, delta: 0.5, kappa: 0.2, n_th: 0.3, gamma_atom: 0.1, delta_schedule: None, omega_r: None };
        let p = thermal_state(0.3, 12, 1e-6).unwrap();
        let mut rho = spin_thermal_density(&cfg, 3, &p).into_data();
        // add coherences so the commutator is nonzero
        let d = cfg.dim();
        rho[1] = Complex64::new(0.01, 0.02);
        rho[d] = Complex64::new(0.01, -0.02);
        let drho = lindblad_rhs(&rho, &params, &ops).unwrap();
        let tr: Complex64 = (0..d).map(|i| drho[i * d + i]).sum();
        assert!(tr.norm() < 1e-12);
        let dm = DensityMatrix::from_data(d, drho).unwrap();
        assert!(dm.hermiticity_error() < 1e-12);
    }

    #[test]
    fn schedule_lookup() {
        let mut p = ModelParams::closed(1.0, 0.5);
        p.delta_schedule = Some(DeltaSchedule { times: vec![1.0, 2.0], deltas: vec![3.0, -1.0] });
        assert_eq!(p.delta_at(0.5), 0.5);
        assert_eq!(p.delta_at(1.0), 3.0);
        assert_eq!(p.delta_at(2.5), -1.0);
        p.delta_schedule = Some(DeltaSchedule { times: vec![2.0, 1.0], deltas: vec![0.0, 0.0] });
        assert!(p.validate().is_err());
    }

    #[test]
    fn warnings_surface() {
        let mut p = ModelParams::closed(1e5, 0.0);
        p.omega_r = Some(1e6);
        p.gamma_atom = 1.0;
        let w = p.warnings(4);
        assert!(w.iter().any(|s| s.starts_with("rwa")));
        assert!(w.iter().any(|s| s.starts_with("atom-loss")));
    }
}
