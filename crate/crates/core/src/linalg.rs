// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense column-major matrices and an unpivoted Householder QR.
//!
//! Columns are processed left to right, so a negligible `R[j][j]` means
//! column `j` lies (numerically) in the span of columns `0..j`. The rank
//! tolerance is relative to the largest diagonal magnitude of `R`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative threshold on `|R[j][j]|` below which a column is declared dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: usize, cols: usize, row_major: &[f64]) -> Self {
        assert_eq!(row_major.len(), rows * cols);
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = row_major[i * cols + j];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            axpy(xj, self.column(j), &mut out);
        }
        out
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| dot(self.column(j), x)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

/// Householder QR of a tall matrix, `A = Q R`.
///
/// The essential part of each reflector (unit leading entry implied) is kept
/// below the diagonal; `R` occupies the upper triangle.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    qr: Matrix,
    betas: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(mut a: Matrix) -> Result<Self> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(Error::InsufficientData { rows: m, cols: n });
        }
        let mut betas = vec![0.0; n];
        for j in 0..n {
            let (head, tail) = a.data.split_at_mut((j + 1) * m);
            let col = &mut head[j * m + j..];
            let x0 = col[0];
            let sigma = norm_sq(&col[1..]);
            let norm_x = libm::sqrt(x0 * x0 + sigma);
            if norm_x == 0.0 {
                continue;
            }
            let alpha = if x0 > 0.0 { -norm_x } else { norm_x };
            let v0 = x0 - alpha;
            // v = [1, col[1..] / v0], beta = 2 / (v^T v)
            for c in col[1..].iter_mut() {
                *c /= v0;
            }
            let beta = -v0 / alpha;
            col[0] = alpha;
            betas[j] = beta;

            let v_tail: &[f64] = &col[1..];
            for k in 0..n - j - 1 {
                let target = &mut tail[k * m + j..(k + 1) * m];
                let s = beta * (target[0] + dot(v_tail, &target[1..]));
                target[0] -= s;
                axpy(-s, v_tail, &mut target[1..]);
            }
        }
        Ok(Self { qr: a, betas })
    }

    pub fn rows(&self) -> usize {
        self.qr.rows
    }

    pub fn cols(&self) -> usize {
        self.qr.cols
    }

    /// `R[i][j]` for `i <= j`.
    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.qr[(i, j)]
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.cols()).map(|j| self.r(j, j)).collect()
    }

    /// Flags columns whose diagonal falls below the rank tolerance.
    pub fn dependent_columns(&self) -> Vec<bool> {
        let diag = self.r_diagonal();
        let largest = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
        diag.iter()
            .map(|d| largest == 0.0 || d.abs() <= RANK_TOLERANCE * largest)
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.dependent_columns().iter().filter(|d| !**d).count()
    }

    pub fn ensure_full_rank(&self) -> Result<()> {
        let rank = self.rank();
        if rank < self.cols() {
            return Err(Error::RankDeficient {
                rank,
                cols: self.cols(),
            });
        }
        Ok(())
    }

    /// Overwrites `b` with `Q^T b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let m = self.rows();
        for j in 0..self.cols() {
            let beta = self.betas[j];
            if beta == 0.0 {
                continue;
            }
            let v_tail = &self.qr.column(j)[j + 1..m];
            let s = beta * (b[j] + dot(v_tail, &b[j + 1..]));
            b[j] -= s;
            axpy(-s, v_tail, &mut b[j + 1..]);
        }
    }

    /// Solves `R x = rhs` by back substitution.
    pub fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let mut x = rhs[..n].to_vec();
        for j in (0..n).rev() {
            x[j] /= self.r(j, j);
            let xj = x[j];
            let col = &self.qr.column(j)[..j];
            axpy(-xj, col, &mut x[..j]);
        }
        x
    }

    /// Solves `R^T z = rhs` by forward substitution.
    pub fn solve_rt_into(&self, rhs: &[f64], z: &mut [f64]) {
        for j in 0..self.cols() {
            let col = &self.qr.column(j)[..j];
            z[j] = (rhs[j] - dot(col, &z[..j])) / self.r(j, j);
        }
    }

    /// Least-squares solution of `min ||A x - b||`, requiring full column rank.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows() {
            return Err(Error::LengthMismatch {
                expected: self.rows(),
                found: b.len(),
            });
        }
        self.ensure_full_rank()?;
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        Ok(self.solve_r(&qtb))
    }

    /// `R^T R v`.
    fn gram_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let mut rv = vec![0.0; n];
        for j in 0..n {
            let col = &self.qr.column(j)[..=j];
            axpy(v[j], col, &mut rv[..=j]);
        }
        (0..n)
            .map(|j| dot(&self.qr.column(j)[..=j], &rv[..=j]))
            .collect()
    }

    /// `(R^T R)^{-1} v`.
    fn gram_solve(&self, v: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.cols()];
        self.solve_rt_into(v, &mut z);
        self.solve_r(&z)
    }

    /// Largest and smallest singular values of `A` via power iteration on
    /// `R^T R` and inverse iteration through the factorization.
    pub fn singular_value_extremes(&self, rel_tol: f64, max_iter: usize) -> Result<(f64, f64)> {
        self.ensure_full_rank()?;
        let largest = libm::sqrt(rayleigh_iterate(self.cols(), rel_tol, max_iter, |v| {
            self.gram_apply(v)
        }));
        let inv_smallest = rayleigh_iterate(self.cols(), rel_tol, max_iter, |v| self.gram_solve(v));
        Ok((largest, 1.0 / libm::sqrt(inv_smallest)))
    }

    /// `sigma_max / sigma_min` with relative tolerance `1e-6`.
    pub fn condition_number(&self) -> Result<f64> {
        let (hi, lo) = self.singular_value_extremes(1e-6, 10_000)?;
        Ok(hi / lo)
    }
}

/// Dominant eigenvalue of a symmetric positive semi-definite operator.
fn rayleigh_iterate(
    n: usize,
    rel_tol: f64,
    max_iter: usize,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
) -> f64 {
    // Deterministic start with no special alignment to the coordinate axes.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.618_033_988_749_895 * i as f64 % 1.0).collect();
    let scale = norm(&v);
    v.iter_mut().for_each(|x| *x /= scale);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = apply(&v);
        let next = dot(&v, &w);
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / w_norm).collect();
        if (next - lambda).abs() <= rel_tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Spectral norm of `A` by power iteration on `A^T A` using only products.
pub fn spectral_norm(a: &Matrix, rel_tol: f64, max_iter: usize) -> f64 {
    libm::sqrt(rayleigh_iterate(a.cols(), rel_tol, max_iter, |v| {
        a.transpose_mul_vec(&a.mul_vec(v))
    }))
}
