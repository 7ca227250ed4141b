//! Dense complex matrices and a row-streaming Householder QR.
//!
//! Least-squares problems here are tall and skinny (tens of thousands of
//! rows, at most a few dozen columns). [`StreamingQr`] folds row blocks into
//! an upper-triangular factor `R` and the rotated right-hand sides `Q^H y`,
//! so the full `Q` is never formed and a solve is available after any
//! prefix of rows.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        let mut out = vec![ZERO; self.rows];
        for (c, &vc) in v.iter().enumerate() {
            if vc == ZERO {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(c)) {
                *o += a * vc;
            }
        }
        out
    }

    /// `self^H * v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows, "vector length must match row count");
        (0..self.cols)
            .map(|c| self.col(c).iter().zip(v).map(|(a, b)| a.conj() * b).sum())
            .collect()
    }

    /// `self^H * self`.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for i in 0..=j {
                let v: Complex64 = self
                    .col(i)
                    .iter()
                    .zip(self.col(j))
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

/// Sequential Householder QR of a tall matrix, with any number of
/// right-hand sides rotated alongside.
///
/// After pushing rows `A` and targets `y_k`, the state satisfies
/// `||A x - y_k||^2 = ||R x - z_k||^2 + tail_k` for every `x`.
#[derive(Debug, Clone)]
pub struct StreamingQr {
    r: CMatrix,
    z: Vec<Vec<Complex64>>,
    tail: Vec<f64>,
    rows_seen: usize,
}

impl StreamingQr {
    pub fn new(cols: usize, n_rhs: usize) -> Self {
        Self {
            r: CMatrix::zeros(cols, cols),
            z: vec![vec![ZERO; cols]; n_rhs],
            tail: vec![0.0; n_rhs],
            rows_seen: 0,
        }
    }

    pub fn cols(&self) -> usize {
        self.r.cols
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn rotated_rhs(&self, k: usize) -> &[Complex64] {
        &self.z[k]
    }

    /// Squared norm of the part of right-hand side `k` orthogonal to the
    /// column space seen so far.
    pub fn tail_energy(&self, k: usize) -> f64 {
        self.tail[k]
    }

    /// Folds a block of rows into the factorization. `block` is consumed as
    /// scratch; `rhs[k]` holds the block's entries of right-hand side `k`.
    pub fn push_block(&mut self, block: &mut CMatrix, rhs: &mut [Vec<Complex64>]) {
        let n = self.r.cols;
        assert_eq!(block.cols, n, "block column count must match");
        assert_eq!(rhs.len(), self.z.len(), "right-hand side count must match");
        let b = block.rows;
        for y in rhs.iter() {
            assert_eq!(y.len(), b, "right-hand side block length must match");
        }
        if b == 0 {
            return;
        }
        for k in 0..n {
            // Reflect [R_kk; A[:, k]] onto the k-th axis.
            let x0 = self.r[(k, k)];
            let tail_sq: f64 = block.col(k).iter().map(|v| v.norm_sqr()).sum();
            if tail_sq == 0.0 {
                continue;
            }
            let abs0 = x0.norm();
            let norm = (abs0 * abs0 + tail_sq).sqrt();
            let phase = if abs0 > 0.0 {
                x0 / abs0
            } else {
                Complex64::new(1.0, 0.0)
            };
            let beta = -phase * norm;
            let u0 = x0 - beta;
            let inv_u0 = u0.inv();
            let tau = 1.0 + abs0 / norm;
            // v = [1; A[:, k] / u0]
            for a in block.col_mut(k) {
                *a *= inv_u0;
            }
            self.r[(k, k)] = beta;

            let (head, rest) = block.data.split_at_mut((k + 1) * b);
            let v = &head[k * b..];
            for (ci, col) in rest.chunks_exact_mut(b).enumerate() {
                let c = k + 1 + ci;
                let w = self.r[(k, c)]
                    + v.iter()
                        .zip(col.iter())
                        .map(|(vi, a)| vi.conj() * a)
                        .sum::<Complex64>();
                let tw = w * tau;
                self.r[(k, c)] -= tw;
                for (a, vi) in col.iter_mut().zip(v) {
                    *a -= tw * vi;
                }
            }
            for (z, y) in self.z.iter_mut().zip(rhs.iter_mut()) {
                let w = z[k]
                    + v.iter()
                        .zip(y.iter())
                        .map(|(vi, a)| vi.conj() * a)
                        .sum::<Complex64>();
                let tw = w * tau;
                z[k] -= tw;
                for (a, vi) in y.iter_mut().zip(v) {
                    *a -= tw * vi;
                }
            }
        }
        for (t, y) in self.tail.iter_mut().zip(rhs.iter()) {
            *t += y.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        self.rows_seen += b;
    }

    /// `||R||_F * ||R^{-1}||_F`, an upper bound on the 2-norm condition
    /// number of the stacked matrix that exceeds it by at most a factor of
    /// the column count. Infinite when a diagonal entry vanishes.
    pub fn condition_estimate(&self) -> f64 {
        match upper_triangular_inverse(&self.r) {
            Ok(inv) => {
                let c = self.r.frobenius_norm() * inv.frobenius_norm();
                if c.is_finite() {
                    c
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    }

    /// Column with the smallest `|R_kk|` when the factor is singular or its
    /// condition estimate exceeds `max_condition`.
    pub fn first_weak_column(&self, max_condition: f64) -> Option<usize> {
        if self.condition_estimate() <= max_condition {
            return None;
        }
        let diag: Vec<f64> = self.r.diagonal().iter().map(|d| d.norm()).collect();
        let mut weakest = 0;
        for (k, &d) in diag.iter().enumerate() {
            if d < diag[weakest] {
                weakest = k;
            }
        }
        Some(weakest)
    }

    /// Least-squares solution for right-hand side `k`.
    pub fn solve(&self, k: usize) -> Result<Vec<Complex64>> {
        back_substitute(&self.r, &self.z[k])
    }
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn back_substitute(r: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = r.cols;
    if r.rows != n || b.len() != n {
        return Err(Error::usage("back substitution needs a square system"));
    }
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= r[(i, j)] * x[j];
        }
        let d = r[(i, i)];
        if d == ZERO {
            return Err(Error::usage(format!(
                "singular triangular factor at column {i}"
            )));
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Inverse of an upper-triangular matrix.
pub fn upper_triangular_inverse(r: &CMatrix) -> Result<CMatrix> {
    let n = r.cols;
    let mut inv = CMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = ZERO);
        e[c] = Complex64::new(1.0, 0.0);
        let x = back_substitute(r, &e)?;
        inv.col_mut(c).copy_from_slice(&x);
    }
    Ok(inv)
}

/// `(R^H R)^{-1} = R^{-1} R^{-H}`, Hermitian positive definite for
/// nonsingular `R`.
pub fn gram_inverse_from_r(r: &CMatrix) -> Result<CMatrix> {
    let ri = upper_triangular_inverse(r)?;
    let n = r.cols;
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: Complex64 = (i.max(j)..n).map(|k| ri[(i, k)] * ri[(j, k)].conj()).sum();
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    Ok(out)
}
