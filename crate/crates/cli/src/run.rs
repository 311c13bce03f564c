//! Scenario execution. Everything is computed in memory first; files are
//! written only once the whole run has succeeded.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use mechqed::constants::hertz;
use mechqed::integrate::Tolerances;
use mechqed::optimize::{optimize, CapRule, Knob, Outcome, Phase};
use mechqed::outcoupling::{
    mean_gamma_r, resonance_shell, shell_radius, simulate_histogram, thermal_amplitude_variance, OutcouplerConfig,
};
use mechqed::params::{chemical_potential, DerivedParams, Device};
use mechqed::tcdyn::{
    default_fock_cutoff, drive_cool_scenario, DriveCoolConfig, Engine, HilbertConfig, MasterOptions, McwfOptions,
    ModelParams, DEFAULT_TRUNCATION_TOLERANCE,
};
use mechqed::PhysicalConstants;

use crate::config::{EngineChoice, ScenarioConfig, ScenarioKind};
use crate::report::{derived_fields, derived_warnings, model_fields, trajectory_table, Fields, Table};
use crate::{CliError, REPORT_SCHEMA};

/// Report plus data files of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub report: Value,
    /// (file name, contents)
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report serializes") + "\n"
    }

    pub fn warnings(&self) -> Vec<String> {
        self.report["warnings"]
            .as_array()
            .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
            .unwrap_or_default()
    }
}

struct Output {
    derived: Fields,
    outputs: Fields,
    warnings: Vec<String>,
    files: Vec<(String, String)>,
}

/// Device with the detuning resolved from `shell_radius` when given.
fn resolved_device(cfg: &ScenarioConfig, consts: &PhysicalConstants) -> Result<Device, CliError> {
    let mut device = cfg.device()?;
    if let Some(r) = cfg.condensate.as_ref().and_then(|c| c.shell_radius) {
        let tf = chemical_potential(&device.condensate, &device.trap, consts);
        device.condensate.detuning = r * r * tf.chemical_potential / consts.hbar;
    }
    Ok(device)
}

fn derive_device(cfg: &ScenarioConfig, consts: &PhysicalConstants) -> Result<(Device, DerivedParams), CliError> {
    let device = resolved_device(cfg, consts)?;
    let d = device.derive(consts)?;
    Ok((device, d))
}

/// Derived parameters only; shared by `run` and `derive --key`.
pub fn derived_only(cfg: &ScenarioConfig) -> Result<(Fields, Vec<String>), CliError> {
    let consts = cfg.constants();
    if cfg.cantilever.is_some() {
        let (device, d) = derive_device(cfg, &consts)?;
        return Ok((derived_fields(&d, &device, &consts), derived_warnings(&d, &device)));
    }
    let e = cfg.evolve.as_ref().expect("validated");
    let p = e.model.as_ref().expect("validated").params();
    let n_max = e.fock_cutoff.unwrap_or_else(|| fock_cutoff_for(&p, e.initial_occupancy, e.atoms));
    Ok((model_fields(&p, e.atoms, n_max), Vec::new()))
}

fn fock_cutoff_for(p: &ModelParams, initial: Option<f64>, atoms: u32) -> usize {
    let n = initial.map_or(p.n_th, |n0| n0.max(p.n_th));
    default_fock_cutoff(n, atoms, DEFAULT_TRUNCATION_TOLERANCE)
}

fn run_derive(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let (derived, warnings) = derived_only(cfg)?;
    Ok(Output { derived, outputs: Fields::new(), warnings, files: Vec::new() })
}

fn run_histogram(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let consts = cfg.constants();
    let (device, d) = derive_device(cfg, &consts)?;
    let h = cfg.histogram.as_ref().expect("validated");
    let mean_sq = thermal_amplitude_variance(d.m_eff, d.omega_r, d.temperature, &consts);
    let mean_rate = mean_gamma_r(d.rabi_per_amplitude, d.mu_c, d.detuning, mean_sq, &consts);
    let tau = match (h.tau, h.mean_gamma_tau) {
        (Some(t), _) => t.value(),
        (None, Some(x)) => {
            if mean_rate.rate <= 0.0 || mean_rate.rate.is_nan() {
                return Err(CliError::Config(
                    "histogram.mean_gamma_tau needs a nonzero mean output-coupling rate (check detuning/shell radius)".into(),
                ));
            }
            x / mean_rate.rate
        }
        (None, None) => unreachable!("validated"),
    };
    let oc = OutcouplerConfig {
        rabi_per_amplitude: d.rabi_per_amplitude,
        mu_c: d.mu_c,
        delta: d.detuning,
        tau,
        gamma_background: h.gamma_background.map_or(d.gamma, |q| q.value()),
        shots: h.shots,
        technical_noise_rel: h.technical_noise,
        seed: cfg.seed,
        bins: h.bins,
        range_max: h.range_max,
    };
    let r = simulate_histogram(&oc, &d, device.temperature, &consts)?;

    let mut derived = derived_fields(&d, &device, &consts);
    let mut warnings = derived_warnings(&d, &device);
    warnings.extend(r.warnings.iter().cloned());
    let rms = mean_sq.sqrt();
    derived.insert("thermal_rms_amplitude_m".into(), json!(rms));
    derived.insert("thermal_rms_per_quadrature_m".into(), json!((mean_sq / 2.0).sqrt()));
    derived.insert("hbar_omega_r_rms_over_mu_c".into(), json!(consts.hbar * d.rabi_per_amplitude * rms / d.mu_c));

    let mut outputs = Fields::new();
    let r_c = shell_radius(d.mu_c, d.detuning, &consts);
    outputs.insert("shell_radius".into(), json!(r_c));
    if let Some(rc) = r_c {
        outputs.insert("resonance_shell_m".into(), json!(resonance_shell(rc, d.tf_radii)?.to_vec()));
    }
    outputs.insert("tau_s".into(), json!(tau));
    outputs.insert("mean_gamma_r_per_s".into(), json!(r.mean_gamma_r));
    outputs.insert("empirical_mean_gamma_r_per_s".into(), json!(r.empirical_mean_gamma_r));
    outputs.insert("mean_gamma_r_tau".into(), json!(r.lambda_bar));
    outputs.insert("kappa_tau".into(), json!(r.kappa_tau));
    outputs.insert("gamma_background_tau".into(), json!(oc.gamma_background * tau));
    outputs.insert("shots".into(), json!(oc.shots));
    outputs.insert("out_of_regime_shots".into(), json!(r.out_of_regime_shots));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    outputs.insert("mean_fraction".into(), json!(mean(&r.fractions())));
    outputs.insert("mean_control_fraction".into(), json!(mean(&r.control)));

    let mut shots = Table::new(&["shot", "amplitude_m", "gamma_r_per_s", "fraction"]);
    for s in &r.shots {
        shots.row((s.shot, s.amplitude, s.gamma_r, s.fraction));
    }
    let mut control = Table::new(&["shot", "fraction"]);
    for (i, f) in r.control.iter().enumerate() {
        control.row((i, f));
    }
    let mut hist = Table::new(&["bin_lower", "bin_upper", "count", "control_count"]);
    for k in 0..r.histogram.counts.len() {
        let (lo, hi) = r.histogram.bin_edges(k);
        hist.row((lo, hi, r.histogram.counts[k], r.control_histogram.counts[k]));
    }
    let files = vec![
        ("shots.csv".to_string(), shots.finish()?),
        ("control.csv".to_string(), control.finish()?),
        ("histogram.csv".to_string(), hist.finish()?),
    ];
    Ok(Output { derived, outputs, warnings, files })
}

fn run_evolve(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let consts = cfg.constants();
    let e = cfg.evolve.as_ref().expect("validated");
    let (params, mut derived, mut warnings) = match &e.model {
        Some(m) => (m.params(), Fields::new(), Vec::new()),
        None => {
            let (device, d) = derive_device(cfg, &consts)?;
            let p = ModelParams {
                g: d.g,
                delta: d.detuning,
                kappa: d.kappa,
                n_th: d.n_th,
                gamma_atom: d.gamma,
                delta_schedule: None,
                omega_r: Some(d.omega_r),
            };
            (p, derived_fields(&d, &device, &consts), derived_warnings(&d, &device))
        }
    };
    let n_max = e.fock_cutoff.unwrap_or_else(|| fock_cutoff_for(&params, e.initial_occupancy, e.atoms));
    derived.extend(model_fields(&params, e.atoms, n_max));

    let tolerances = Tolerances { rtol: e.rtol, atol: e.atol, ..Tolerances::default() };
    let engine = match e.engine {
        EngineChoice::Master => Engine::Master(MasterOptions { tolerances, max_dim: e.max_master_dim, ..Default::default() }),
        EngineChoice::Mcwf => Engine::Mcwf {
            trajectories: e.trajectories.expect("validated"),
            seed: cfg.seed,
            options: McwfOptions { tolerances, ..Default::default() },
        },
    };
    let dc = DriveCoolConfig {
        hilbert: HilbertConfig::new(e.atoms, n_max),
        engine,
        t_end: e.t_end.map(|q| q.value()),
        points: e.points,
        initial_occupancy: e.initial_occupancy,
    };
    let (rec, summary) = drive_cool_scenario(e.preparation, &params, &dc)?;
    warnings.extend(summary.warnings.iter().cloned());

    let mut outputs = Fields::new();
    outputs.insert("engine".into(), json!(e.engine));
    outputs.insert("preparation".into(), json!(summary.preparation));
    outputs.insert("initial_mean_n".into(), json!(summary.initial_mean_n));
    outputs.insert("final_mean_n".into(), json!(rec.mean_n().last()));
    outputs.insert("final_mean_sz".into(), json!(rec.mean_sz().last()));
    outputs.insert("extremum_mean_n".into(), json!(summary.extremum_mean_n));
    outputs.insert("extremum_time_s".into(), json!(summary.extremum_time));
    outputs.insert("transfer_time_s".into(), json!(summary.transfer_time));
    outputs.insert("extremum_over_transfer_time".into(), json!(summary.time_ratio));
    outputs.insert("trajectories".into(), json!(rec.trajectory_count));
    outputs.insert("jump_count".into(), json!(rec.jump_count));
    outputs.insert("max_cutoff_leak".into(), json!(rec.max_cutoff_leak));
    outputs.insert("truncation_flagged".into(), json!(rec.truncation_flagged));
    let files = vec![("trajectory.csv".to_string(), trajectory_table(&rec)?)];
    Ok(Output { derived, outputs, warnings, files })
}

fn knob_value_key(k: Knob) -> String {
    match k {
        Knob::TrapMeanFrequency | Knob::Detuning => format!("{}_hz", k.name()),
        _ => format!("{}_m", k.name()),
    }
}

fn knob_display(k: Knob, v: f64) -> f64 {
    match k {
        Knob::TrapMeanFrequency | Knob::Detuning => hertz(v),
        _ => v,
    }
}

fn run_optimize(cfg: &ScenarioConfig) -> Result<Output, CliError> {
    let consts = cfg.constants();
    let base = resolved_device(cfg, &consts)?;
    let axes = cfg.axes()?;
    let fom = cfg.optimize.as_ref().expect("validated").figure;
    let result = optimize(fom, &base, &axes, &cfg.constraints(), &cfg.budget(), cfg.seed, &consts)?;
    let d = result.best.derived.expect("best candidate is feasible");
    let derived = derived_fields(&d, &result.best.device, &consts);
    let warnings = derived_warnings(&d, &result.best.device);

    let mut outputs = Fields::new();
    outputs.insert("figure".into(), json!(fom));
    outputs.insert("best_score".into(), json!(result.search.best_score));
    outputs.insert("evaluations".into(), json!(result.search.trace.len()));
    let mut best = Fields::new();
    for (a, v) in axes.iter().zip(&result.search.best_point) {
        best.insert(knob_value_key(a.knob), json!(knob_display(a.knob, *v)));
    }
    outputs.insert("best_point".into(), json!(best));
    if !matches!(cfg.constraints().cap_rule, CapRule::Unchanged) {
        outputs.insert("gradient_cap_t_per_m".into(), json!(result.best.device.magnet.gradient_cap));
    }

    let knob_cols: Vec<String> = axes.iter().map(|a| knob_value_key(a.knob)).collect();
    let mut header: Vec<&str> = vec!["index", "phase"];
    header.extend(knob_cols.iter().map(String::as_str));
    header.extend(["feasible", "score", "accepted", "reason"]);
    let mut trace = Table::new(&header);
    for t in &result.search.trace {
        let mut rec: Vec<String> = vec![
            t.index.to_string(),
            match t.phase {
                Phase::Grid => "grid".into(),
                Phase::Refine => "refine".into(),
            },
        ];
        for (a, v) in axes.iter().zip(&t.point) {
            rec.push(format_float(knob_display(a.knob, *v)));
        }
        match &t.outcome {
            Outcome::Feasible { score } => rec.extend(["true".into(), format_float(*score), t.accepted.to_string(), String::new()]),
            Outcome::Infeasible { reason } => rec.extend(["false".into(), String::new(), t.accepted.to_string(), reason.clone()]),
        }
        trace.row(rec);
    }
    Ok(Output { derived, outputs, warnings, files: vec![("trace.csv".to_string(), trace.finish()?)] })
}

/// Shortest round-trip decimal, as used in the CSV files.
fn format_float(x: f64) -> String {
    let mut t = Table::new(&["x"]);
    t.row([x]);
    t.finish().expect("in-memory").lines().nth(1).unwrap_or_default().to_string()
}

/// Executes a validated scenario without touching the file system.
pub fn execute(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    let out = match cfg.kind {
        ScenarioKind::Derive => run_derive(cfg)?,
        ScenarioKind::Histogram => run_histogram(cfg)?,
        ScenarioKind::Evolve => run_evolve(cfg)?,
        ScenarioKind::Optimize => run_optimize(cfg)?,
    };
    let file_names: Vec<&str> = out.files.iter().map(|(n, _)| n.as_str()).collect();
    let report = json!({
        "schema": REPORT_SCHEMA,
        "scenario": cfg.name,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "input": serde_json::to_value(cfg).expect("config serializes"),
        "derived": out.derived,
        "outputs": out.outputs,
        "warnings": out.warnings,
        "files": file_names,
    });
    let mut files = out.files;
    files.push(("config.toml".to_string(), cfg.to_toml()));
    Ok(Artifacts { report, files })
}

/// Output directory: explicit flag, then the config, then `$MECHQED_OUT_DIR/<name>`,
/// then `mechqed-out/<name>`.
pub fn output_dir(cfg: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output_dir {
        return PathBuf::from(p);
    }
    let root = std::env::var_os(crate::OUT_DIR_ENV).map_or_else(|| PathBuf::from("mechqed-out"), PathBuf::from);
    root.join(&cfg.name)
}

/// Writes `report.json` and the data files into `dir`.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put("report.json", &artifacts.report_json())?;
    for (name, contents) in &artifacts.files {
        put(name, contents)?;
    }
    Ok(written)
}

/// Looks up a derived value by key, or by a dotted path into `{input, derived}`.
pub fn lookup(cfg: &ScenarioConfig, key: &str) -> Result<Value, CliError> {
    let (derived, _) = derived_only(cfg)?;
    if let Some(v) = derived.get(key) {
        return Ok(v.clone());
    }
    let root = json!({ "derived": derived, "input": serde_json::to_value(cfg).expect("config serializes") });
    let mut cur = &root;
    for part in key.split('.') {
        cur = match cur {
            Value::Object(m) => m.get(part),
            Value::Array(a) => part.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => None,
        }
        .ok_or_else(|| CliError::Config(format!("no derived value or config entry at '{key}'")))?;
    }
    Ok(cur.clone())
}
