//! Thermal-probe experiment: atoms in |1,−1⟩ are spin-flipped out of the
//! condensate by the field of the oscillating magnet, at a rate set by the
//! instantaneous cantilever amplitude.
//!
//! A shot draws a thermal amplitude, evaluates the output-coupling rate Γ_r on
//! the resonance shell r_c = √(ħδ/μ_c), applies the survival law over τ and
//! multiplies by Gaussian technical noise. Since Γ_r ∝ a² and a² is
//! exponentially distributed, the noise-free survival fraction has the closed
//! form density of [`SurvivalDistribution`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::params::DerivedParams;

/// κτ above which the static-amplitude approximation is reported as doubtful.
pub const KAPPA_TAU_WARNING: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcouplerConfig {
    /// Ω_R per unit amplitude, μ_B G_m / (√8 ħ), rad/(s·m).
    pub rabi_per_amplitude: f64,
    /// Chemical potential μ_c, J.
    pub mu_c: f64,
    /// δ = ω_r − ω_L, rad/s.
    pub delta: f64,
    /// Coupling time τ, s.
    pub tau: f64,
    /// Background loss γ, 1/s.
    pub gamma_background: f64,
    pub shots: usize,
    /// Relative width of the multiplicative Gaussian atom-number noise.
    pub technical_noise_rel: f64,
    pub seed: u64,
    pub bins: usize,
    /// Upper edge of the histogram range [0, range_max].
    pub range_max: f64,
}

impl OutcouplerConfig {
    /// Defaults for binning (50 bins on [0, 1.1]) and noise (5%).
    pub fn new(rabi_per_amplitude: f64, mu_c: f64, delta: f64, tau: f64, gamma_background: f64, shots: usize, seed: u64) -> Self {
        Self {
            rabi_per_amplitude,
            mu_c,
            delta,
            tau,
            gamma_background,
            shots,
            technical_noise_rel: 0.05,
            seed,
            bins: 50,
            range_max: 1.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots < 1 {
            return Err(Error::invalid("histogram.shots", "must be >= 1"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid("histogram.tau", "must be > 0"));
        }
        if !(self.technical_noise_rel.is_finite() && self.technical_noise_rel >= 0.0) {
            return Err(Error::invalid("histogram.technical_noise", "must be >= 0"));
        }
        if !(self.mu_c.is_finite() && self.mu_c > 0.0) {
            return Err(Error::invalid("histogram.mu_c", "must be > 0"));
        }
        if !(self.rabi_per_amplitude.is_finite() && self.rabi_per_amplitude >= 0.0) {
            return Err(Error::invalid("histogram.rabi_per_amplitude", "must be >= 0"));
        }
        if !(self.gamma_background.is_finite() && self.gamma_background >= 0.0) {
            return Err(Error::invalid("histogram.gamma_background", "must be >= 0"));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("histogram.delta", "must be finite"));
        }
        if self.bins < 1 || !(self.range_max.is_finite() && self.range_max > 0.0) {
            return Err(Error::invalid("histogram.bins", "need at least one bin and range_max > 0"));
        }
        Ok(())
    }
}

/// Output-coupling rate together with its regime flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcouplingRate {
    /// Γ_r, 1/s.
    pub rate: f64,
    /// r_c, or `None` when the shell lies outside the condensate.
    pub shell_radius: Option<f64>,
    /// ħΩ_R ≥ μ_c: outside the weak-coupling regime of the rate formula.
    pub out_of_regime: bool,
}

/// r_c = √(ħδ/μ_c) when 0 ≤ ħδ ≤ μ_c.
pub fn shell_radius(mu_c: f64, delta: f64, consts: &PhysicalConstants) -> Option<f64> {
    let x = consts.hbar * delta / mu_c;
    (0.0..=1.0).contains(&x).then(|| x.sqrt())
}

/// Detuning that puts the resonance shell at `r_c`.
pub fn detuning_for_shell(r_c: f64, mu_c: f64, consts: &PhysicalConstants) -> f64 {
    r_c * r_c * mu_c / consts.hbar
}

/// Γ_r = (15π/8) (ħΩ_R²/μ_c) (r_c − r_c³).
pub fn gamma_r(rabi: f64, mu_c: f64, delta: f64, consts: &PhysicalConstants) -> OutcouplingRate {
    let out_of_regime = consts.hbar * rabi.abs() >= mu_c;
    let shell = shell_radius(mu_c, delta, consts);
    let rate = match shell {
        Some(r) if r < 1.0 => 15.0 * PI / 8.0 * consts.hbar * rabi * rabi / mu_c * (r - r * r * r),
        _ => 0.0,
    };
    OutcouplingRate { rate, shell_radius: shell, out_of_regime }
}

/// Semi-axes r_i = r_c R_i of the resonance ellipsoid.
pub fn resonance_shell(r_c: f64, tf_radii: [f64; 3]) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&r_c) {
        return Err(Error::Domain(format!("shell radius must lie in [0, 1], got {r_c}")));
    }
    Ok(tf_radii.map(|r| r_c * r))
}

/// ⟨a²⟩ = 2 k_B T / (m_eff ω_r²) for a thermal mode (both quadratures).
pub fn thermal_amplitude_variance(m_eff: f64, omega_r: f64, temperature: f64, consts: &PhysicalConstants) -> f64 {
    2.0 * consts.k_b * temperature / (m_eff * omega_r * omega_r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalAmplitude {
    /// m
    pub amplitude: f64,
    /// rad, uniform on [0, 2π). Γ_r does not depend on it.
    pub phase: f64,
}

/// Draws a Rayleigh amplitude (a² exponential with mean ⟨a²⟩) and a uniform phase.
pub fn sample_thermal_amplitude<R: Rng + ?Sized>(
    rng: &mut R,
    m_eff: f64,
    omega_r: f64,
    temperature: f64,
    consts: &PhysicalConstants,
) -> ThermalAmplitude {
    let mean_sq = thermal_amplitude_variance(m_eff, omega_r, temperature, consts);
    let x: f64 = rng.sample(Exp1);
    let phase = rng.random::<f64>() * 2.0 * PI;
    ThermalAmplitude { amplitude: (mean_sq * x).sqrt(), phase }
}

/// exp[−(Γ_r + γ_bg) τ]
pub fn survival_fraction(gamma_r: f64, gamma_bg: f64, tau: f64) -> f64 {
    (-(gamma_r + gamma_bg) * tau).exp()
}

/// Distribution of the noise-free surviving fraction F = e^{−γτ} e^{−λ̄x},
/// x ~ Exp(1), with λ̄ = ⟨Γ_r⟩τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalDistribution {
    pub lambda_bar: f64,
    /// e^{−γτ}, the upper end of the support.
    pub background: f64,
}

impl SurvivalDistribution {
    pub fn new(lambda_bar: f64, background: f64) -> Result<Self> {
        if !(lambda_bar.is_finite() && lambda_bar > 0.0) {
            return Err(Error::Domain(format!("lambda_bar must be > 0, got {lambda_bar}")));
        }
        if !(background > 0.0 && background <= 1.0) {
            return Err(Error::Domain(format!("background factor must lie in (0, 1], got {background}")));
        }
        Ok(Self { lambda_bar, background })
    }

    pub fn pdf(&self, f: f64) -> f64 {
        if f <= 0.0 || f > self.background {
            return 0.0;
        }
        let u = f / self.background;
        (1.0 / self.lambda_bar) * u.powf(1.0 / self.lambda_bar - 1.0) / self.background
    }

    pub fn cdf(&self, f: f64) -> f64 {
        if f <= 0.0 {
            0.0
        } else if f >= self.background {
            1.0
        } else {
            (f / self.background).powf(1.0 / self.lambda_bar)
        }
    }

    pub fn mean(&self) -> f64 {
        self.background / (1.0 + self.lambda_bar)
    }
}

/// Density p(f) = (1/λ̄) f^{1/λ̄ − 1} on (0, 1].
pub fn analytic_survival_pdf(lambda_bar: f64) -> Result<SurvivalDistribution> {
    SurvivalDistribution::new(lambda_bar, 1.0)
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Uniform bins on [lower, upper]; values outside land in the edge bins.
    pub fn from_values(values: &[f64], lower: f64, upper: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let width = (upper - lower) / bins as f64;
        for &v in values {
            let k = ((v - lower) / width).floor();
            let k = if k.is_nan() || k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
            counts[k] += 1;
        }
        Self { lower, upper, counts }
    }

    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let w = (self.upper - self.lower) / self.counts.len() as f64;
        (self.lower + k as f64 * w, self.lower + (k + 1) as f64 * w)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: usize,
    pub amplitude: f64,
    pub gamma_r: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalEnsembleResult {
    pub shots: Vec<ShotRecord>,
    /// Background loss and noise only.
    pub control: Vec<f64>,
    pub histogram: Histogram,
    pub control_histogram: Histogram,
    /// Γ_r evaluated at ⟨a²⟩.
    pub mean_gamma_r: f64,
    pub empirical_mean_gamma_r: f64,
    /// ⟨Γ_r⟩τ
    pub lambda_bar: f64,
    pub kappa_tau: f64,
    pub out_of_regime_shots: usize,
    pub warnings: Vec<String>,
}

impl ThermalEnsembleResult {
    pub fn fractions(&self) -> Vec<f64> {
        self.shots.iter().map(|s| s.fraction).collect()
    }
}

/// ⟨Γ_r⟩ defined as Γ_r at the thermal mean ⟨a²⟩.
pub fn mean_gamma_r(
    rabi_per_amplitude: f64,
    mu_c: f64,
    delta: f64,
    mean_sq_amplitude: f64,
    consts: &PhysicalConstants,
) -> OutcouplingRate {
    gamma_r(rabi_per_amplitude * mean_sq_amplitude.sqrt(), mu_c, delta, consts)
}

/// Runs the seeded shot ensemble. Shot `i` uses ChaCha stream `i`.
pub fn simulate_histogram(
    cfg: &OutcouplerConfig,
    device: &DerivedParams,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<ThermalEnsembleResult> {
    cfg.validate()?;
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be > 0 for a thermal ensemble"));
    }
    let mean_sq = thermal_amplitude_variance(device.m_eff, device.omega_r, temperature, consts);
    let mean_rate = mean_gamma_r(cfg.rabi_per_amplitude, cfg.mu_c, cfg.delta, mean_sq, consts);

    let draws: Vec<(ShotRecord, f64, bool)> = (0..cfg.shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(shot as u64);
            let amp = sample_thermal_amplitude(&mut rng, device.m_eff, device.omega_r, temperature, consts);
            let z: f64 = rng.sample(StandardNormal);
            let z_control: f64 = rng.sample(StandardNormal);
            let rate = gamma_r(cfg.rabi_per_amplitude * amp.amplitude, cfg.mu_c, cfg.delta, consts);
            let noise = 1.0 + cfg.technical_noise_rel * z;
            let fraction = (survival_fraction(rate.rate, cfg.gamma_background, cfg.tau) * noise).max(0.0);
            let control_noise = 1.0 + cfg.technical_noise_rel * z_control;
            let control = (survival_fraction(0.0, cfg.gamma_background, cfg.tau) * control_noise).max(0.0);
            (ShotRecord { shot, amplitude: amp.amplitude, gamma_r: rate.rate, fraction }, control, rate.out_of_regime)
        })
        .collect();

    let shots: Vec<ShotRecord> = draws.iter().map(|d| d.0).collect();
    let control: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let out_of_regime_shots = draws.iter().filter(|d| d.2).count();
    let fractions: Vec<f64> = shots.iter().map(|s| s.fraction).collect();
    let kappa_tau = device.kappa * cfg.tau;

    let mut warnings = Vec::new();
    if kappa_tau > KAPPA_TAU_WARNING {
        warnings.push(format!(
            "kappa-tau: kappa*tau = {kappa_tau:.3} exceeds {KAPPA_TAU_WARNING}; the amplitude is not static during a shot"
        ));
    }
    if mean_rate.out_of_regime || out_of_regime_shots > 0 {
        warnings.push(format!(
            "rabi-regime: hbar*Omega_R >= mu_c in {out_of_regime_shots} of {} shots (mean amplitude {})",
            cfg.shots,
            if mean_rate.out_of_regime { "out of regime" } else { "in regime" }
        ));
    }
    if mean_rate.shell_radius.is_none() {
        warnings.push("shell: resonance shell lies outside the condensate, no output coupling".into());
    }

    Ok(ThermalEnsembleResult {
        histogram: Histogram::from_values(&fractions, 0.0, cfg.range_max, cfg.bins),
        control_histogram: Histogram::from_values(&control, 0.0, cfg.range_max, cfg.bins),
        empirical_mean_gamma_r: shots.iter().map(|s| s.gamma_r).sum::<f64>() / cfg.shots as f64,
        shots,
        control,
        mean_gamma_r: mean_rate.rate,
        lambda_bar: mean_rate.rate * cfg.tau,
        kappa_tau,
        out_of_regime_shots,
        warnings,
    })
}
