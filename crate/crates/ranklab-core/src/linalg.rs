//! Small fixed-capacity vectors and matrices.
//!
//! Chart dimensions are tiny (2 or 3 for the builtin models, 6 at most), so
//! everything lives on the stack and is `Copy`. Runtime length `n` rides along
//! with the data.

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::num::FloatExt;
use alloc::format;

/// Largest supported chart dimension.
pub const MAX_DIM: usize = 6;

/// Stack-allocated real vector of runtime length `n <= MAX_DIM`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecN {
    n: usize,
    a: [f64; MAX_DIM],
}

impl VecN {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM);
        VecN { n, a: [0.0; MAX_DIM] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = VecN::zeros(s.len());
        v.a[..s.len()].copy_from_slice(s);
        v
    }

    /// Standard basis vector `e_i`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = VecN::zeros(n);
        v.a[i] = 1.0;
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.a[..self.n]
    }

    #[inline]
    pub fn dot(&self, other: &VecN) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.a[i] * other.a[i];
        }
        s
    }

    /// Euclidean (chart) norm; metric norms live on the model.
    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn scale(&self, c: f64) -> VecN {
        let mut v = *self;
        for i in 0..v.n {
            v.a[i] *= c;
        }
        v
    }

    #[inline]
    pub fn add(&self, other: &VecN) -> VecN {
        debug_assert_eq!(self.n, other.n);
        let mut v = *self;
        for i in 0..v.n {
            v.a[i] += other.a[i];
        }
        v
    }

    #[inline]
    pub fn sub(&self, other: &VecN) -> VecN {
        debug_assert_eq!(self.n, other.n);
        let mut v = *self;
        for i in 0..v.n {
            v.a[i] -= other.a[i];
        }
        v
    }

    /// `self + c * other`.
    #[inline]
    pub fn add_scaled(&self, other: &VecN, c: f64) -> VecN {
        debug_assert_eq!(self.n, other.n);
        let mut v = *self;
        for i in 0..v.n {
            v.a[i] += c * other.a[i];
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl core::ops::Index<usize> for VecN {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert!(i < self.n);
        &self.a[i]
    }
}

impl core::ops::IndexMut<usize> for VecN {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        debug_assert!(i < self.n);
        &mut self.a[i]
    }
}

/// Stack-allocated square matrix of runtime size `n <= MAX_DIM`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatN {
    n: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl MatN {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM);
        MatN { n, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = MatN::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.a[i][j] = v;
    }

    pub fn mat_vec(&self, v: &VecN) -> VecN {
        debug_assert_eq!(self.n, v.len());
        let mut out = VecN::zeros(self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.a[i][j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// Symmetric bilinear form `u^T A v`.
    pub fn bilinear(&self, u: &VecN, v: &VecN) -> f64 {
        u.dot(&self.mat_vec(v))
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<MatN> {
        let n = self.n;
        let mut a = self.a;
        let mut inv = MatN::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r][col].abs() > a[piv][col].abs() {
                    piv = r;
                }
            }
            if a[piv][col].abs() < 1e-300 {
                return Err(Error::SingularMetric {
                    detail: format!("pivot {:.3e} in column {col}", a[piv][col]),
                });
            }
            a.swap(col, piv);
            inv.a.swap(col, piv);
            let d = a[col][col];
            for j in 0..n {
                a[col][j] /= d;
                inv.a[col][j] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r][col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r][j] -= f * a[col][j];
                    inv.a[r][j] -= f * inv.a[col][j];
                }
            }
        }
        Ok(inv)
    }

    /// Smallest eigenvalue of a symmetric matrix (via [`Self::sym_eigen`]).
    pub fn min_eigenvalue_sym(&self) -> Result<f64> {
        let (vals, _) = self.sym_eigen()?;
        let mut m = vals[0];
        for i in 1..self.n {
            if vals[i] < m {
                m = vals[i];
            }
        }
        Ok(m)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns `(eigenvalues, eigenvectors)` with eigenvectors as matrix
    /// columns, sorted by ascending eigenvalue.
    pub fn sym_eigen(&self) -> Result<(VecN, MatN)> {
        let n = self.n;
        let mut a = self.a;
        let mut v = MatN::identity(n);
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                scale = scale.max(a[i][j].abs());
            }
        }
        if scale == 0.0 {
            return Ok((VecN::zeros(n), v));
        }
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off.sqrt() <= 1e-14 * scale {
                let mut vals = VecN::zeros(n);
                for i in 0..n {
                    vals[i] = a[i][i];
                }
                // ascending sort, applied to columns of v as well
                let mut idx = [0usize; MAX_DIM];
                for (i, slot) in idx.iter_mut().enumerate().take(n) {
                    *slot = i;
                }
                idx[..n].sort_unstable_by(|&i, &j| {
                    vals[i].partial_cmp(&vals[j]).unwrap_or(core::cmp::Ordering::Equal)
                });
                let mut svals = VecN::zeros(n);
                let mut svecs = MatN::zeros(n);
                for (new, &old) in idx[..n].iter().enumerate() {
                    svals[new] = vals[old];
                    for r in 0..n {
                        svecs.a[r][new] = v.a[r][old];
                    }
                }
                return Ok((svals, svecs));
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.a[k][p];
                        let vkq = v.a[k][q];
                        v.a[k][p] = c * vkp - s * vkq;
                        v.a[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        Err(Error::EigenFailed)
    }

    /// Eigenvector column `j` as a vector.
    pub fn column(&self, j: usize) -> VecN {
        let mut out = VecN::zeros(self.n);
        for i in 0..self.n {
            out[i] = self.a[i][j];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let mut m = MatN::zeros(3);
        let data = [[4.0, 1.0, 0.2], [0.5, 3.0, -1.0], [0.1, -0.3, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, data[i][j]);
            }
        }
        let inv = m.inverse().unwrap();
        for i in 0..3 {
            let e = VecN::basis(3, i);
            let r = inv.mat_vec(&m.mat_vec(&e));
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r[j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eigen_diagonalises() {
        let mut m = MatN::zeros(3);
        let data = [[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, data[i][j]);
            }
        }
        let (vals, vecs) = m.sym_eigen().unwrap();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        for k in 0..3 {
            let v = vecs.column(k);
            let mv = m.mat_vec(&v);
            for i in 0..3 {
                assert!((mv[i] - vals[k] * v[i]).abs() < 1e-10);
            }
        }
    }
}
