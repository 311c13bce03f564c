use super::*;
use std::f64::consts::PI;

fn grid(t_end: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| t_end * i as f64 / (points - 1) as f64).collect()
}

fn master_tight() -> MasterOptions {
    MasterOptions {
        tolerances: crate::integrate::Tolerances { rtol: 1e-10, atol: 1e-12, h_min: 1e-14 },
        ..Default::default()
    }
}

#[test]
fn vacuum_rabi_master() {
    let cfg = HilbertConfig::new(1, 3);
    let ops = build_operators(&cfg).unwrap();
    let g = 1.3;
    let rho0 = DensityMatrix::pure(&basis_state(&cfg, 1, 0));
    let t = grid(2.0 * PI / g, 41);
    let rec = evolve_master(&rho0, &ModelParams::closed(g, 0.0), &ops, &t, &MasterOptions::default()).unwrap();
    for (ti, sz) in rec.times.iter().zip(rec.mean_sz()) {
        let p_up = sz + 0.5;
        assert!((p_up - (g * ti).cos().powi(2)).abs() < 1e-6, "t = {ti}: {p_up}");
    }
    assert!(!rec.truncation_flagged);
}

#[test]
fn resonator_relaxes_at_twice_kappa() {
    let n_th = 0.5;
    let kappa = 0.4;
    let cfg = HilbertConfig::new(1, 40);
    let ops = build_operators(&cfg).unwrap();
    let params = ModelParams { g: 0.0, delta: 0.0, kappa, n_th, gamma_atom: 0.0, delta_schedule: None, omega_r: None };
    let rho0 = DensityMatrix::pure(&basis_state(&cfg, 0, 2));
    let t = grid(6.0, 13);
    let rec = evolve_master(&rho0, &params, &ops, &t, &master_tight()).unwrap();
    for (ti, n) in rec.times.iter().zip(rec.mean_n()) {
        let exact = n_th + (2.0 - n_th) * (-2.0 * kappa * ti).exp();
        assert!(((n - exact) / exact).abs() < 1e-6, "t = {ti}: {n} vs {exact}");
    }
}

#[test]
fn excited_atom_decays_at_gamma() {
    let cfg = HilbertConfig::new(1, 2);
    let ops = build_operators(&cfg).unwrap();
    let gamma = 0.7;
    let params = ModelParams { g: 0.0, delta: 0.0, kappa: 0.0, n_th: 0.0, gamma_atom: gamma, delta_schedule: None, omega_r: None };
    let rho0 = DensityMatrix::pure(&basis_state(&cfg, 1, 0));
    let t = grid(4.0, 9);
    let rec = evolve_master(&rho0, &params, &ops, &t, &master_tight()).unwrap();
    for (ti, sz) in rec.times.iter().zip(rec.mean_sz()) {
        assert!((sz + 0.5 - (-gamma * ti).exp()).abs() < 1e-9);
    }
    assert!(rec.warnings.iter().any(|w| w.starts_with("atom-loss")));
}

#[test]
fn closed_master_matches_pure_state_propagation() {
    let cfg = HilbertConfig::new(3, 6);
    let ops = build_operators(&cfg).unwrap();
    let params = ModelParams::closed(0.8, 0.3);
    let psi = basis_state(&cfg, 3, 1);
    let t = grid(5.0, 21);
    let m = evolve_master(&DensityMatrix::pure(&psi), &params, &ops, &t, &master_tight()).unwrap();
    let opts = McwfOptions {
        tolerances: crate::integrate::Tolerances { rtol: 1e-10, atol: 1e-12, h_min: 1e-14 },
        ..Default::default()
    };
    let q = evolve_mcwf(&McwfInitial::Pure(psi), &params, &ops, &t, 3, 9, &opts).unwrap();
    for i in 0..t.len() {
        assert!((m.mean_n()[i] - q.mean_n()[i]).abs() < 1e-6);
        assert!((m.mean_sz()[i] - q.mean_sz()[i]).abs() < 1e-6);
    }
    let se = q.stderr.unwrap();
    assert!(se.mean_n.iter().chain(&se.mean_sz).all(|&v| v == 0.0));
    assert_eq!(q.jump_count, 0);
}

#[test]
fn mcwf_is_schedule_independent() {
    let cfg = HilbertConfig::new(2, 5);
    let ops = build_operators(&cfg).unwrap();
    let params = ModelParams { g: 1.0, delta: 0.1, kappa: 0.2, n_th: 0.05, gamma_atom: 0.1, delta_schedule: None, omega_r: None };
    let psi = basis_state(&cfg, 2, 0);
    let t = grid(3.0, 7);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evolve_mcwf(&McwfInitial::Pure(psi.clone()), &params, &ops, &t, 64, 1234, &McwfOptions::default()).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b);
    assert!(a.jump_count > 0);
    let c = evolve_mcwf(&McwfInitial::Pure(psi.clone()), &params, &ops, &t, 64, 1235, &McwfOptions::default()).unwrap();
    assert_ne!(a.observables, c.observables);
}

#[test]
fn mcwf_rejects_degenerate_inputs() {
    let cfg = HilbertConfig::new(1, 2);
    let ops = build_operators(&cfg).unwrap();
    let p = ModelParams::closed(1.0, 0.0);
    let psi = basis_state(&cfg, 1, 0);
    assert!(evolve_mcwf(&McwfInitial::Pure(psi.clone()), &p, &ops, &[0.0, 1.0], 0, 1, &McwfOptions::default()).is_err());
    let unnormalized: Vec<_> = psi.iter().map(|z| z * 2.0).collect();
    assert!(evolve_mcwf(&McwfInitial::Pure(unnormalized), &p, &ops, &[0.0, 1.0], 1, 1, &McwfOptions::default()).is_err());
}

#[test]
fn master_size_cap() {
    let cfg = HilbertConfig::new(20, 30);
    let ops = build_operators(&cfg).unwrap();
    let rho0 = DensityMatrix::pure(&basis_state(&cfg, 0, 0));
    let err = evolve_master(&rho0, &ModelParams::closed(1.0, 0.0), &ops, &[0.0, 1.0], &MasterOptions::default());
    assert!(matches!(err, Err(crate::Error::Resource { dim: 651, max: 400 })));
}

#[test]
fn detuning_switch_freezes_exchange() {
    let cfg = HilbertConfig::new(1, 2);
    let ops = build_operators(&cfg).unwrap();
    let mut params = ModelParams::closed(1.0, 0.0);
    params.delta_schedule = Some(DeltaSchedule { times: vec![PI / 4.0], deltas: vec![2e3] });
    let rho0 = DensityMatrix::pure(&basis_state(&cfg, 1, 0));
    let t = vec![0.0, PI / 4.0, 2.0, 3.0];
    let rec = evolve_master(&rho0, &params, &ops, &t, &MasterOptions::default()).unwrap();
    // off-resonant exchange of a superposition is first order in g/δ
    for sz in &rec.mean_sz()[1..] {
        assert!(sz.abs() < 2.0 * 1.0 / 2e3, "{sz}");
    }
}

#[test]
fn drive_conserves_excitation() {
    let params = ModelParams::closed(1.0, 0.0);
    let cfg = DriveCoolConfig {
        hilbert: HilbertConfig::for_thermal(8, 0.0),
        engine: Engine::Master(master_tight()),
        t_end: None,
        points: 31,
        initial_occupancy: None,
    };
    let (rec, summary) = drive_cool_scenario(SpinPreparation::AllUp, &params, &cfg).unwrap();
    let e0 = rec.observables.total_excitation[0];
    assert_eq!(e0, 8.0);
    for e in &rec.observables.total_excitation {
        assert!((e - e0).abs() < 1e-8);
    }
    assert!(summary.extremum_mean_n > 1.0);
    assert!(!rec.truncation_flagged);
}

#[test]
fn decoupled_resonator_stays_thermal() {
    let params = ModelParams { g: 0.0, delta: 0.0, kappa: 0.0, n_th: 1.0, gamma_atom: 0.0, delta_schedule: None, omega_r: None };
    let cfg = DriveCoolConfig {
        hilbert: HilbertConfig::for_thermal(2, 1.0),
        engine: Engine::Master(MasterOptions::default()),
        t_end: Some(2.0),
        points: 5,
        initial_occupancy: None,
    };
    let (rec, _) = drive_cool_scenario(SpinPreparation::AllDown, &params, &cfg).unwrap();
    let n0 = rec.mean_n()[0];
    // truncated thermal mean sits just below n_th
    assert!((n0 - 1.0).abs() < 1e-5);
    for n in rec.mean_n() {
        assert!((n - n0).abs() < 1e-9);
    }
    let no_t_end = DriveCoolConfig { t_end: None, ..cfg };
    assert!(drive_cool_scenario(SpinPreparation::AllDown, &params, &no_t_end).is_err());
}
