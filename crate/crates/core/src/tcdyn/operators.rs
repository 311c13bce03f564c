use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Symmetric Dicke subspace of `atom_count` two-level atoms (S = N/2) times a
/// phonon Fock space truncated at `fock_cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertConfig {
    pub atom_count: u32,
    pub fock_cutoff: usize,
    pub truncation_tolerance: f64,
    /// Upper bound on the product dimension accepted by [`build_operators`].
    pub max_dim: usize,
}

pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_DIM: usize = 1 << 20;

impl HilbertConfig {
    pub fn new(atom_count: u32, fock_cutoff: usize) -> Self {
        Self {
            atom_count,
            fock_cutoff,
            truncation_tolerance: DEFAULT_TRUNCATION_TOLERANCE,
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    /// Cutoff large enough for a thermal state at `n_th` plus the `N`
    /// excitations the spin can hand to the resonator.
    pub fn for_thermal(atom_count: u32, n_th: f64) -> Self {
        let n_max = default_fock_cutoff(n_th, atom_count, DEFAULT_TRUNCATION_TOLERANCE);
        Self::new(atom_count, n_max)
    }

    pub fn spin(&self) -> f64 {
        0.5 * self.atom_count as f64
    }

    pub fn spin_levels(&self) -> usize {
        self.atom_count as usize + 1
    }

    pub fn fock_levels(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.spin_levels().saturating_mul(self.fock_levels())
    }

    /// Basis index of |m_S = k − S⟩ ⊗ |n⟩.
    pub fn index(&self, spin_level: usize, n: usize) -> usize {
        spin_level * self.fock_levels() + n
    }

    pub fn validate(&self) -> Result<()> {
        if self.atom_count < 1 {
            return Err(Error::invalid("hilbert.atom_count", "must be >= 1"));
        }
        if self.fock_cutoff < 1 {
            return Err(Error::invalid("hilbert.fock_cutoff", "must be >= 1"));
        }
        if !(self.truncation_tolerance > 0.0 && self.truncation_tolerance < 1.0) {
            return Err(Error::invalid("hilbert.truncation_tolerance", "must lie in (0, 1)"));
        }
        let dim = self.dim();
        if dim > self.max_dim {
            return Err(Error::Resource { dim, max: self.max_dim });
        }
        Ok(())
    }
}

/// Smallest cutoff that meets both the rule of thumb ⌈n_th + 8√(n_th+1) + 8⌉
/// and the geometric-tail bound at `tolerance`, plus `atom_count` headroom.
pub fn default_fock_cutoff(n_th: f64, atom_count: u32, tolerance: f64) -> usize {
    let rule = (n_th + 8.0 * (n_th + 1.0).sqrt() + 8.0).ceil() as usize;
    let tail = if n_th > 0.0 {
        let x = n_th / (1.0 + n_th);
        // x^{n_max+1} < tolerance
        ((tolerance.ln() / x.ln()).floor() as usize).max(1)
    } else {
        0
    };
    rule.max(tail) + atom_count as usize
}

/// Ladder and collective-spin operators on the product basis.
#[derive(Debug, Clone)]
pub struct Operators {
    pub cfg: HilbertConfig,
    pub a: CsrMatrix,
    pub a_dag: CsrMatrix,
    /// a†a
    pub number: CsrMatrix,
    pub sz: CsrMatrix,
    pub s_plus: CsrMatrix,
    pub s_minus: CsrMatrix,
    phonons: Vec<usize>,
    magnetic: Vec<f64>,
}

impl Operators {
    pub fn dim(&self) -> usize {
        self.cfg.dim()
    }

    /// Phonon number of each basis state.
    pub fn phonon_numbers(&self) -> &[usize] {
        &self.phonons
    }

    /// m_S of each basis state.
    pub fn magnetic_numbers(&self) -> &[f64] {
        &self.magnetic
    }
}

pub fn build_operators(cfg: &HilbertConfig) -> Result<Operators> {
    cfg.validate()?;
    let s = cfg.spin();
    let ns = cfg.spin_levels();
    let nf = cfg.fock_levels();

    let a_f = CsrMatrix::from_triplets(nf, nf, (1..nf).map(|n| (n - 1, n, (n as f64).sqrt())).collect());
    let sp = CsrMatrix::from_triplets(
        ns,
        ns,
        (0..ns - 1)
            .map(|k| {
                let m = k as f64 - s;
                (k + 1, k, (s * (s + 1.0) - m * (m + 1.0)).sqrt())
            })
            .collect(),
    );
    let sz_s = CsrMatrix::diagonal(&(0..ns).map(|k| k as f64 - s).collect::<Vec<_>>());
    let id_s = CsrMatrix::identity(ns);
    let id_f = CsrMatrix::identity(nf);

    let a = CsrMatrix::kron(&id_s, &a_f);
    let a_dag = a.transpose();
    let number = CsrMatrix::kron(&id_s, &CsrMatrix::diagonal(&(0..nf).map(|n| n as f64).collect::<Vec<_>>()));
    let s_plus = CsrMatrix::kron(&sp, &id_f);
    let s_minus = s_plus.transpose();
    let sz = CsrMatrix::kron(&sz_s, &id_f);

    let dim = cfg.dim();
    let phonons = (0..dim).map(|i| i % nf).collect();
    let magnetic = (0..dim).map(|i| (i / nf) as f64 - s).collect();
    Ok(Operators { cfg: *cfg, a, a_dag, number, sz, s_plus, s_minus, phonons, magnetic })
}
