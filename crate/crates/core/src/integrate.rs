//! Dormand-Prince 5(4) embedded Runge-Kutta stepping for complex-valued
//! linear systems (state vectors and flattened density operators).

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b - b* (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Steps below this size abort integration.
    pub h_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_min: 1e-14 }
    }
}

/// Reusable stage buffers for one system size.
pub struct Dopri5 {
    pub tol: Tolerances,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
}

impl Dopri5 {
    pub fn new(dim: usize, tol: Tolerances) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self { tol, k: std::array::from_fn(|_| z.clone()), tmp: z }
    }

    fn stage<F>(&mut self, f: &mut F, t: f64, y: &[Complex64], h: f64, coeffs: &[(usize, f64)], out: usize)
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        self.tmp.copy_from_slice(y);
        for &(j, a) in coeffs {
            let ha = h * a;
            for (t_i, k_i) in self.tmp.iter_mut().zip(&self.k[j]) {
                *t_i += k_i * ha;
            }
        }
        let (tmp, k) = (&self.tmp, &mut self.k[out]);
        f(t, tmp, k);
    }

    /// Takes one trial step of size `h` from `(t, y)`, writing the fifth-order
    /// solution to `y_out`. Returns the scaled error norm; the step is
    /// acceptable when it is ≤ 1.
    pub fn try_step<F>(&mut self, f: &mut F, t: f64, y: &[Complex64], h: f64, y_out: &mut [Complex64]) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        f(t, y, &mut self.k[0]);
        self.stage(f, t + C2 * h, y, h, &[(0, A21)], 1);
        self.stage(f, t + C3 * h, y, h, &[(0, A31), (1, A32)], 2);
        self.stage(f, t + C4 * h, y, h, &[(0, A41), (1, A42), (2, A43)], 3);
        self.stage(f, t + C5 * h, y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4);
        self.stage(f, t + h, y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5);
        for i in 0..y.len() {
            y_out[i] = y[i]
                + (self.k[0][i] * A71
                    + self.k[2][i] * A73
                    + self.k[3][i] * A74
                    + self.k[4][i] * A75
                    + self.k[5][i] * A76)
                    * h;
        }
        f(t + h, y_out, &mut self.k[6]);

        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(y_out[i].norm());
            let (er, ei) = (e.re / scale, e.im / scale);
            acc += er * er + ei * ei;
        }
        (acc / (2 * y.len()).max(1) as f64).sqrt()
    }

    /// Step-size proposal after a trial step with scaled error `err`.
    pub fn next_h(h: f64, err: f64) -> f64 {
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h * factor
    }

    /// Advances `y` from `t` to exactly `t_end` with adaptive steps. `h` carries
    /// the step-size estimate between calls. `on_step` runs after every accepted
    /// step and may abort by returning an error.
    pub fn advance<F, G>(
        &mut self,
        f: &mut F,
        t: &mut f64,
        y: &mut Vec<Complex64>,
        t_end: f64,
        h: &mut f64,
        mut on_step: G,
    ) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
        G: FnMut(f64, &mut Vec<Complex64>) -> Result<()>,
    {
        let mut y_new = vec![Complex64::new(0.0, 0.0); y.len()];
        while *t < t_end {
            let remaining = t_end - *t;
            let clipped = *h >= remaining;
            let h_try = if clipped { remaining } else { *h };
            let err = self.try_step(f, *t, y, h_try, &mut y_new);
            if !err.is_finite() {
                return Err(Error::Numerical(format!("non-finite error estimate at t = {:e}", *t)));
            }
            if err <= 1.0 {
                *t = if clipped { t_end } else { *t + h_try };
                std::mem::swap(y, &mut y_new);
                on_step(*t, y)?;
                let proposal = Self::next_h(h_try, err);
                if !clipped || proposal < *h {
                    *h = proposal;
                }
            } else {
                *h = Self::next_h(h_try, err).min(h_try);
                if *h < self.tol.h_min * (1.0 + t.abs()) {
                    return Err(Error::StepUnderflow { t: *t, h: *h });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_rotation_is_accurate() {
        // y' = -i ω y  →  y(t) = e^{-iωt}
        let w = 3.0;
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = Complex64::new(0.0, -w) * y[0];
        let mut solver = Dopri5::new(1, Tolerances { rtol: 1e-10, atol: 1e-12, h_min: 1e-14 });
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let (mut t, mut h) = (0.0, 1e-3);
        let mut steps = 0;
        solver
            .advance(&mut f, &mut t, &mut y, 10.0, &mut h, |_, _| {
                steps += 1;
                Ok(())
            })
            .unwrap();
        assert_eq!(t, 10.0);
        let exact = Complex64::from_polar(1.0, -w * 10.0);
        assert!((y[0] - exact).norm() < 1e-8, "{}", (y[0] - exact).norm());
        assert!(steps > 10);
    }

    #[test]
    fn decay_matches_exponential() {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = -y[0] * 2.0;
            dy[1] = -y[1] * 0.5;
        };
        let mut solver = Dopri5::new(2, Tolerances::default());
        let mut y = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let (mut t, mut h) = (0.0, 0.1);
        solver.advance(&mut f, &mut t, &mut y, 3.0, &mut h, |_, _| Ok(())).unwrap();
        assert!((y[0].re - (-6.0f64).exp()).abs() < 1e-9);
        assert!((y[1].im - 2.0 * (-1.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn callback_can_abort() {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = y[0];
        let mut solver = Dopri5::new(1, Tolerances::default());
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let (mut t, mut h) = (0.0, 0.1);
        let r = solver.advance(&mut f, &mut t, &mut y, 1.0, &mut h, |_, _| Err(Error::Numerical("stop".into())));
        assert!(r.is_err());
    }
}
