use serde::{Deserialize, Serialize};

use super::operators::Operators;

/// Which engine produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Master,
    Mcwf,
}

/// Expectation values at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sample {
    pub mean_n: f64,
    pub mean_sz: f64,
    /// ⟨a†a + S_z + S⟩
    pub total_excitation: f64,
    /// Population at n = n_max.
    pub cutoff_leak: f64,
}

impl Sample {
    /// Observables from basis-state populations (all tracked operators are
    /// diagonal in the product basis). `populations` need not be normalized.
    pub fn from_populations(populations: &[f64], ops: &Operators) -> Self {
        let n_max = ops.cfg.fock_cutoff;
        let (mut norm, mut n, mut sz, mut leak) = (0.0, 0.0, 0.0, 0.0);
        for ((&p, &k), &m) in populations.iter().zip(ops.phonon_numbers()).zip(ops.magnetic_numbers()) {
            norm += p;
            n += p * k as f64;
            sz += p * m;
            if k == n_max {
                leak += p;
            }
        }
        let s = ops.cfg.spin();
        Self {
            mean_n: n / norm,
            mean_sz: sz / norm,
            total_excitation: (n + sz) / norm + s,
            cutoff_leak: leak / norm,
        }
    }

    pub(crate) fn as_array(&self) -> [f64; 4] {
        [self.mean_n, self.mean_sz, self.total_excitation, self.cutoff_leak]
    }
}

/// Column-wise series of the tracked observables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub mean_n: Vec<f64>,
    pub mean_sz: Vec<f64>,
    pub total_excitation: Vec<f64>,
    pub cutoff_leak: Vec<f64>,
}

impl ObservableSeries {
    pub(crate) fn push_array(&mut self, v: [f64; 4]) {
        self.mean_n.push(v[0]);
        self.mean_sz.push(v[1]);
        self.total_excitation.push(v[2]);
        self.cutoff_leak.push(v[3]);
    }

    pub fn push(&mut self, s: &Sample) {
        self.push_array(s.as_array());
    }

    pub fn len(&self) -> usize {
        self.mean_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_n.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub engine: EngineKind,
    pub times: Vec<f64>,
    pub observables: ObservableSeries,
    /// Standard error of the trajectory mean, per observable (MCWF only).
    pub stderr: Option<ObservableSeries>,
    pub trajectory_count: usize,
    pub seed: Option<u64>,
    /// Largest n = n_max population seen at any accepted step.
    pub max_cutoff_leak: f64,
    pub truncation_tolerance: f64,
    pub truncation_flagged: bool,
    pub jump_count: u64,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn mean_n(&self) -> &[f64] {
        &self.observables.mean_n
    }

    pub fn mean_sz(&self) -> &[f64] {
        &self.observables.mean_sz
    }

    pub(crate) fn finish(&mut self) {
        self.truncation_flagged = self.max_cutoff_leak >= self.truncation_tolerance;
        if self.truncation_flagged {
            self.warnings.push(format!(
                "truncation: population at the Fock cutoff reached {:.3e} (tolerance {:.1e}); results are not converged in n_max",
                self.max_cutoff_leak, self.truncation_tolerance
            ));
        }
    }
}
