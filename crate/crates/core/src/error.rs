use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A specification field failed validation. `field` is a dotted path.
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// Hilbert space larger than the configured cap.
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    Resource { dim: usize, max: usize },

    /// Thermal tail beyond the Fock cutoff is heavier than the tolerance.
    #[error("fock cutoff {n_max} too small for n_th = {n_th}: tail mass {tail:e} exceeds {tolerance:e}; increase n_max")]
    Cutoff { n_max: usize, n_th: f64, tail: f64, tolerance: f64 },

    #[error("integrator step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("numerical consistency: {0}")]
    Numerical(String),

    #[error("no feasible candidate in the search space")]
    NoFeasiblePoint,
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec { field: field.into(), reason: reason.into() }
    }

    /// Prefix the field path of an [`Error::InvalidSpec`] with the owning section.
    pub fn within(self, section: &str) -> Self {
        match self {
            Error::InvalidSpec { field, reason } => Error::InvalidSpec {
                field: format!("{section}.{field}"),
                reason,
            },
            other => other,
        }
    }
}
