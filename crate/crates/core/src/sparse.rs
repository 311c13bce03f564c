//! Compressed-sparse-row matrices with real entries acting on complex data.
//!
//! Every operator in the Tavis-Cummings problem (ladder operators, collective
//! spin, the Hamiltonian and the jump operators) is real in the product basis,
//! so only the states carry complex amplitudes.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let mut kept_idx = Vec::with_capacity(indices.len());
        let mut kept_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != 0.0 {
                indptr[r + 1] += 1;
                kept_idx.push(c);
                kept_val.push(v);
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices: kept_idx, values: kept_val }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_triplets(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over the stored entries of row `i` as (col, value).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.triplets().map(|(i, j, v)| (i, j, s * v)).collect())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self.triplets().chain(other.triplets().map(|(i, j, v)| (i, j, s * v))).collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    t.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).add_scaled(&other.matmul(self), -1.0)
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut t = Vec::with_capacity(a.nnz() * b.nnz());
        for (i, j, x) in a.triplets() {
            for (k, l, y) in b.triplets() {
                t.push((i * b.nrows + k, j * b.ncols + l, x * y));
            }
        }
        Self::from_triplets(a.nrows * b.nrows, a.ncols * b.ncols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum (induced ∞-norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.add_scaled(&self.transpose(), -1.0).max_abs() <= tol
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    /// `y += alpha · A x`
    pub fn mul_vec_acc(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in self.row(i) {
                acc += x[j] * v;
            }
            *yi += alpha * acc;
        }
    }

    /// `Y += alpha · A X` for a row-major square `X` of side `ncols`.
    pub fn left_mul_dense_acc(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.ncols;
        debug_assert_eq!(x.len(), d * d);
        for i in 0..self.nrows {
            let yrow = &mut y[i * d..(i + 1) * d];
            for (k, v) in self.row(i) {
                let s = alpha * v;
                let xrow = &x[k * d..(k + 1) * d];
                for (yj, xj) in yrow.iter_mut().zip(xrow) {
                    *yj += s * xj;
                }
            }
        }
    }

    /// `Y += alpha · X A` for a row-major square `X` of side `nrows`.
    pub fn right_mul_dense_acc(&self, alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.nrows;
        debug_assert_eq!(x.len(), d * d);
        for r in 0..d {
            let xrow = &x[r * d..(r + 1) * d];
            let yrow = &mut y[r * d..(r + 1) * d];
            for (k, xk) in xrow.iter().enumerate() {
                if xk.re == 0.0 && xk.im == 0.0 {
                    continue;
                }
                let s = alpha * xk;
                for (j, v) in self.row(k) {
                    yrow[j] += s * v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 0.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn products_match_dense() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 1, 2.0), (1, 2, 3.0), (2, 0, -1.0), (1, 1, 0.5)]);
        let b = a.transpose();
        let ab = a.matmul(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = (0..3).map(|k| ad[i][k] * bd[k][j]).sum();
                assert_eq!(ab[i][j], e);
            }
        }
        let x: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let mut left = vec![c(0.0); 9];
        let mut right = vec![c(0.0); 9];
        a.left_mul_dense_acc(c(1.0), &x, &mut left);
        a.right_mul_dense_acc(c(1.0), &x, &mut right);
        for i in 0..3 {
            for j in 0..3 {
                let l: Complex64 = (0..3).map(|k| x[k * 3 + j] * ad[i][k]).sum();
                let r: Complex64 = (0..3).map(|k| x[i * 3 + k] * ad[k][j]).sum();
                assert_eq!(left[i * 3 + j], l);
                assert_eq!(right[i * 3 + j], r);
            }
        }
    }

    #[test]
    fn kron_shapes_and_entries() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 2.0)]);
        let b = CsrMatrix::identity(3);
        let k = CsrMatrix::kron(&a, &b);
        assert_eq!((k.nrows(), k.ncols()), (6, 6));
        assert_eq!(k.get(1, 4), 1.0);
        assert_eq!(k.get(5, 2), 2.0);
        assert_eq!(k.nnz(), 6);
    }
}
