//! Small dense complex matrices.
//!
//! Matrices here are at most a handful of rows, so storage is inline and all
//! factorisations are plain partial-pivot loops.

use num_complex::Complex64;
use smallvec::SmallVec;
use std::ops::{Index, IndexMut};

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: SmallVec<[C64; 16]>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: SmallVec::from_elem(C64::new(0.0, 0.0), rows * cols) }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// `self * rhs^*`.
    pub fn mul_adjoint(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "matrix shape mismatch");
        Self::from_fn(self.rows, rhs.rows, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * rhs[(j, k)].conj()).sum()
        })
    }

    /// `I - self * rhs^*`, the generic kernel argument for the matrix domains.
    pub fn identity_minus_mul_adjoint(&self, rhs: &Self) -> Self {
        let mut m = self.mul_adjoint(rhs);
        for v in m.data.iter_mut() {
            *v = -*v;
        }
        for i in 0..self.rows {
            m[(i, i)] += 1.0;
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        match n {
            0 => return C64::new(1.0, 0.0),
            1 => return self.data[0],
            2 => return self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {}
        }
        let mut a = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).unwrap();
            if a[(p, k)] == C64::new(0.0, 0.0) {
                return C64::new(0.0, 0.0);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        det
    }

    /// Log-determinant of a Hermitian matrix via Cholesky, `None` if it is
    /// not positive definite.
    pub fn hermitian_logdet(&self) -> Option<f64> {
        let l = self.cholesky()?;
        Some((0..self.rows).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
    }

    /// Lower Cholesky factor of a Hermitian positive definite matrix.
    pub fn cholesky(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l[(j, j)] = C64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(l)
    }

    /// Inverse by Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).unwrap();
            let piv = a[(p, k)];
            if piv.norm() == 0.0 || !piv.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                    inv.data.swap(p * n + j, k * n + j);
                }
            }
            let r = a[(k, k)].inv();
            for j in 0..n {
                a[(k, j)] *= r;
                inv[(k, j)] *= r;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (ak, ik) = (a[(k, j)], inv[(k, j)]);
                    a[(i, j)] -= f * ak;
                    inv[(i, j)] -= f * ik;
                }
            }
        }
        Some(inv)
    }

    /// Largest eigenvalue of a Hermitian matrix.
    pub fn hermitian_max_eigenvalue(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        match self.rows {
            1 => self.data[0].re,
            2 => {
                let (a, d) = (self.data[0].re, self.data[3].re);
                let b = self.data[1].norm_sqr();
                0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b).sqrt()
            }
            n => {
                let m = nalgebra::DMatrix::from_fn(n, n, |i, j| self[(i, j)]);
                m.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let g = if self.rows <= self.cols { self.mul_adjoint(self) } else { self.adjoint().mul_adjoint(&self.adjoint()) };
        g.hermitian_max_eigenvalue().max(0.0).sqrt()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}
