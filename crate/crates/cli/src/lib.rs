//! Batch front-end for the `mechqed` library: scenario files in, JSON report
//! and CSV tables out.

pub mod config;
pub mod report;
pub mod run;
pub mod units;

use std::fmt;

pub use config::ScenarioConfig;
pub use run::{execute, write_artifacts, Artifacts};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "MECHQED_OUT_DIR";
pub const REPORT_SCHEMA: &str = "mechqed.run-report/1";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(mechqed::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use mechqed::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidSpec { .. } | E::Domain(_) | E::Resource { .. } | E::Cutoff { .. }) => 2,
            CliError::Core(E::NoFeasiblePoint) => 3,
            CliError::Core(E::Numerical(_) | E::StepUnderflow { .. }) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "infeasible",
            4 => "numerical",
            _ => "io",
        }
    }

    /// One-line JSON description for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mechqed::Error> for CliError {
    fn from(e: mechqed::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Shipped scenario files, by name.
pub const CATALOG: &[(&str, &str)] = &[
    ("thermal_probe_histogram", include_str!("../scenarios/thermal_probe_histogram.toml")),
    ("single_atom_strong_coupling", include_str!("../scenarios/single_atom_strong_coupling.toml")),
    ("collective_strong_coupling", include_str!("../scenarios/collective_strong_coupling.toml")),
    ("collective_optimize", include_str!("../scenarios/collective_optimize.toml")),
    ("vacuum_rabi", include_str!("../scenarios/vacuum_rabi.toml")),
    ("vacuum_rabi_mcwf", include_str!("../scenarios/vacuum_rabi_mcwf.toml")),
    ("drive", include_str!("../scenarios/drive.toml")),
    ("cool", include_str!("../scenarios/cool.toml")),
    ("thermalization", include_str!("../scenarios/thermalization.toml")),
    ("unraveling", include_str!("../scenarios/unraveling.toml")),
];

pub fn catalog_entry(name: &str) -> Option<&'static str> {
    CATALOG.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Reads a scenario from a file path, or from the catalog when no such file exists.
pub fn load_scenario(spec: &str) -> Result<ScenarioConfig, CliError> {
    let path = std::path::Path::new(spec);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {spec}: {e}")))?
    } else if let Some(t) = catalog_entry(spec) {
        t.to_string()
    } else {
        return Err(CliError::Config(format!("no scenario file or catalog entry named '{spec}'")));
    };
    ScenarioConfig::from_toml(&text)
}
