//! Report fields and CSV tables.
//!
//! Keys carry their unit as a suffix. Frequencies and rates are given in Hz
//! (value/2π) next to the raw 1/s value where both are useful.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use mechqed::constants::hertz;
use mechqed::params::{Cooperativity, DerivedParams, Device, GradientRoute};
use mechqed::tcdyn::{ModelParams, TrajectoryRecord};
use mechqed::PhysicalConstants;

use crate::CliError;

pub type Fields = BTreeMap<String, Value>;

fn put(map: &mut Fields, key: &str, v: impl Into<Value>) {
    map.insert(key.to_string(), v.into());
}

fn cooperativity_value(c: Cooperativity) -> Value {
    match c {
        Cooperativity::Finite(x) => json!(x),
        Cooperativity::Infinite => json!("infinite"),
    }
}

pub fn derived_fields(d: &DerivedParams, device: &Device, consts: &PhysicalConstants) -> Fields {
    let mut m = Fields::new();
    put(&mut m, "omega_r_hz", hertz(d.omega_r));
    put(&mut m, "omega_r_route", serde_json::to_value(d.omega_r_route).unwrap());
    put(&mut m, "m_eff_kg", d.m_eff);
    put(&mut m, "tip_mass_kg", device.cantilever.tip_mass);
    put(&mut m, "a_qm_m", d.a_qm);
    put(&mut m, "kappa_hz", hertz(d.kappa));
    put(&mut m, "kappa_per_s", d.kappa);
    put(&mut m, "quality_factor", device.cantilever.quality_factor);
    put(&mut m, "magnetic_moment_a_m2", device.magnet.dipole_moment());
    put(&mut m, "gradient_t_per_m", d.gradient);
    put(&mut m, "gradient_dipole_t_per_m", d.gradient_dipole);
    put(&mut m, "gradient_route", serde_json::to_value(d.gradient_route).unwrap());
    put(&mut m, "mu_c_j", d.mu_c);
    put(&mut m, "mu_c_hz", d.mu_c / consts.h());
    put(&mut m, "tf_radii_m", d.tf_radii.to_vec());
    put(&mut m, "gamma_three_body_hz", hertz(d.gamma_three_body));
    put(&mut m, "gamma_hz", hertz(d.gamma));
    put(&mut m, "gamma_per_s", d.gamma);
    put(&mut m, "omega_l_hz", hertz(d.omega_l));
    put(&mut m, "omega_bar_t_hz", hertz(d.omega_bar_t));
    put(&mut m, "trap_distance_m", device.trap.distance);
    put(&mut m, "n_th", d.n_th);
    put(&mut m, "g_hz", hertz(d.g));
    put(&mut m, "g_collective_hz", hertz(d.collective_g()));
    put(&mut m, "cooperativity", cooperativity_value(d.cooperativity));
    put(&mut m, "cooperativity_collective", cooperativity_value(d.cooperativity.collective(d.atom_number)));
    put(&mut m, "atom_number", d.atom_number);
    put(&mut m, "detuning_hz", hertz(d.detuning));
    put(&mut m, "temperature_k", d.temperature);
    put(&mut m, "rabi_per_amplitude_hz_per_m", hertz(d.rabi_per_amplitude));
    m
}

pub fn derived_warnings(d: &DerivedParams, device: &Device) -> Vec<String> {
    let mut w = Vec::new();
    if d.gradient_route == GradientRoute::Capped {
        w.push(format!(
            "gradient-cap: dipole gradient {:.6e} T/m limited to {:.6e} T/m",
            d.gradient_dipole, d.gradient
        ));
    }
    let longest = device.magnet.length.max(device.magnet.width).max(device.magnet.thickness);
    if d.gradient_route != GradientRoute::Supplied && device.trap.distance < 3.0 * longest {
        w.push(format!(
            "dipole-approximation: trap distance {:.3e} m is not large against the magnet size {:.3e} m; the point-dipole gradient is an estimate",
            device.trap.distance, longest
        ));
    }
    w
}

pub fn model_fields(p: &ModelParams, atoms: u32, fock_cutoff: usize) -> Fields {
    let mut m = Fields::new();
    put(&mut m, "g_hz", hertz(p.g));
    put(&mut m, "g_collective_hz", hertz(p.g * (atoms as f64).sqrt()));
    put(&mut m, "kappa_hz", hertz(p.kappa));
    put(&mut m, "gamma_hz", hertz(p.gamma_atom));
    put(&mut m, "delta_hz", hertz(p.delta));
    put(&mut m, "n_th", p.n_th);
    put(&mut m, "atoms", atoms);
    put(&mut m, "fock_cutoff", fock_cutoff);
    put(&mut m, "hilbert_dim", (atoms as usize + 1) * (fock_cutoff + 1));
    m
}

/// Comma-separated table with a header row.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<S: serde::Serialize>(&mut self, record: S) {
        self.writer.serialize(record).expect("in-memory write");
    }

    pub fn finish(self) -> Result<String, CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn trajectory_table(rec: &TrajectoryRecord) -> Result<String, CliError> {
    let mut header = vec!["t_s", "mean_n", "mean_sz", "total_excitation", "cutoff_leak"];
    if rec.stderr.is_some() {
        header.extend(["stderr_mean_n", "stderr_mean_sz", "stderr_total_excitation", "stderr_cutoff_leak"]);
    }
    let mut t = Table::new(&header);
    let o = &rec.observables;
    for i in 0..rec.times.len() {
        let base = (rec.times[i], o.mean_n[i], o.mean_sz[i], o.total_excitation[i], o.cutoff_leak[i]);
        match &rec.stderr {
            Some(e) => t.row((base.0, base.1, base.2, base.3, base.4, e.mean_n[i], e.mean_sz[i], e.total_excitation[i], e.cutoff_leak[i])),
            None => t.row(base),
        }
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_uses_round_trip_floats() {
        let mut t = Table::new(&["a", "b"]);
        t.row((0.1f64, 1.5e-13f64));
        t.row((1u64, -2.0f64));
        let s = t.finish().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "a,b");
        let parsed: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(parsed, vec![0.1, 1.5e-13]);
        assert!(!s.contains('\r'));
    }
}
