use num_complex::Complex64;

use crate::error::{Error, Result};

use super::operators::HilbertConfig;

/// Row-major D×D density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn from_data(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Domain(format!("density data has {} entries, expected {}", data.len(), dim * dim)));
        }
        Ok(Self { dim, data })
    }

    /// |ψ⟩⟨ψ| for a normalized `psi`.
    pub fn pure(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let mut rho = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                rho.data[i * dim + j] = psi[i] * psi[j].conj();
            }
        }
        rho
    }

    pub fn diagonal(populations: &[f64]) -> Self {
        let mut rho = Self::zeros(populations.len());
        for (i, &p) in populations.iter().enumerate() {
            rho.data[i * rho.dim + i] = Complex64::new(p, 0.0);
        }
        rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.dim, &self.data)
    }
}

pub(crate) fn hermiticity_error(dim: usize, data: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in i..dim {
            worst = worst.max((data[i * dim + j] - data[j * dim + i].conj()).norm());
        }
    }
    worst
}

/// Thermal phonon distribution p_n ∝ (n_th/(1+n_th))ⁿ on 0..=n_max,
/// normalized over the truncated space.
pub fn thermal_state(n_th: f64, n_max: usize, tolerance: f64) -> Result<Vec<f64>> {
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(Error::Domain(format!("n_th must be >= 0, got {n_th}")));
    }
    let x = n_th / (1.0 + n_th);
    let tail = x.powi(n_max as i32 + 1);
    if tail >= tolerance {
        return Err(Error::Cutoff { n_max, n_th, tail, tolerance });
    }
    let mut p: Vec<f64> = (0..=n_max).map(|n| x.powi(n as i32)).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    Ok(p)
}

/// |m_S = k − S⟩ ⊗ |n⟩ as a state vector.
pub fn basis_state(cfg: &HilbertConfig, spin_level: usize, n: usize) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); cfg.dim()];
    psi[cfg.index(spin_level, n)] = Complex64::new(1.0, 0.0);
    psi
}

/// |m_S = k − S⟩⟨·| ⊗ ρ_thermal.
pub fn spin_thermal_density(cfg: &HilbertConfig, spin_level: usize, phonon_populations: &[f64]) -> DensityMatrix {
    let mut pops = vec![0.0; cfg.dim()];
    for (n, &p) in phonon_populations.iter().enumerate() {
        pops[cfg.index(spin_level, n)] = p;
    }
    DensityMatrix::diagonal(&pops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_temperature_is_vacuum() {
        let p = thermal_state(0.0, 5, 1e-6).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_and_ratio() {
        let n_th = 1.5;
        let p = thermal_state(n_th, 60, 1e-6).unwrap();
        let mean: f64 = p.iter().enumerate().map(|(n, v)| n as f64 * v).sum();
        assert!((mean - n_th).abs() < 1e-6);
        assert_eq!(p[1] / p[0], n_th / (1.0 + n_th));
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn heavy_tail_is_rejected() {
        match thermal_state(2.0, 10, 1e-6) {
            Err(Error::Cutoff { n_max: 10, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pure_density_is_hermitian() {
        let psi = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let rho = DensityMatrix::pure(&psi);
        assert!(rho.hermiticity_error() < 1e-16);
        assert_relative_eq!(rho.trace().re, 1.0, max_relative = 1e-15);
    }
}
