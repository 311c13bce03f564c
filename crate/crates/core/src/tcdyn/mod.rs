//! Open-system dynamics of N two-level atoms collectively coupled to one
//! mechanical mode (Tavis-Cummings model), on the symmetric Dicke subspace
//! times a truncated phonon Fock space.
//!
//! Two engines evolve the same Lindblad generator: a deterministic
//! master-equation integrator for small dimensions and a Monte Carlo
//! wavefunction engine that only stores state vectors.

mod master;
mod mcwf;
mod model;
mod operators;
mod record;
mod scenario;
mod state;

pub use master::{evolve_master, evolve_master_state, MasterOptions};
pub use mcwf::{evolve_mcwf, McwfInitial, McwfOptions};
pub use model::{hamiltonian, lindblad_rhs, Collapse, DeltaSchedule, Generator, ModelParams};
pub use operators::{
    build_operators, default_fock_cutoff, HilbertConfig, Operators, DEFAULT_MAX_DIM, DEFAULT_TRUNCATION_TOLERANCE,
};
pub use record::{EngineKind, ObservableSeries, Sample, TrajectoryRecord};
pub use scenario::{drive_cool_scenario, transfer_time, DriveCoolConfig, DriveCoolSummary, Engine, SpinPreparation};
pub use state::{basis_state, spin_thermal_density, thermal_state, DensityMatrix};

#[cfg(test)]
mod tests;
