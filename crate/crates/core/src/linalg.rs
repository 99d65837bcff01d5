//! Small dense matrices and a cyclic Jacobi eigensolver.
//!
//! Everything here targets desk-scale state spaces (dimension a few hundred).
//! The eigensolver uses classical Jacobi rotations in cyclic-by-row order and
//! stops once every off-diagonal entry is below an absolute threshold; for
//! symmetric matrices this is backward stable and accurate to machine
//! precision in each eigenvalue, which is what the exact cross-checks need.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = DenseMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn scaled(&self, c: f64) -> Self {
        DenseMatrix { dim: self.dim, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn add_assign_scaled(&mut self, other: &DenseMatrix, c: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = DenseMatrix::zeros(d);
        for i in 0..d {
            for l in 0..d {
                let a = self.data[i * d + l];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[l * d..(l + 1) * d];
                let dst = &mut out.data[i * d..(i + 1) * d];
                for (o, b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        DenseMatrix::from_fn(d, |i, j| self.get(j, i))
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Default absolute off-diagonal threshold for the Jacobi sweep.
pub const JACOBI_OFF_THRESHOLD: f64 = 1e-13;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, ascending. Symmetry is the caller's
/// contract; entries are symmetrized before sweeping to keep rotations exact.
pub fn jacobi_eigenvalues(m: &DenseMatrix, off_threshold: f64) -> Result<Vec<f64>> {
    let d = m.dim;
    if d == 0 {
        return Ok(Vec::new());
    }
    if d == 1 {
        return Ok(vec![m.get(0, 0)]);
    }
    let mut a = DenseMatrix::from_fn(d, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));

    let mut last_off = f64::INFINITY;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off_max = 0.0f64;
        for p in 0..d {
            for q in p + 1..d {
                off_max = off_max.max(a.get(p, q).abs());
            }
        }
        if off_max <= off_threshold {
            let mut eigs: Vec<f64> = (0..d).map(|i| a.get(i, i)).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        last_off = off_max;
        for p in 0..d {
            for q in p + 1..d {
                let apq = a.get(p, q);
                if apq.abs() <= off_threshold * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                // rotation angle from the 2x2 block, Rutishauser form
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..d {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a.set(r, p, new_rp);
                    a.set(p, r, new_rp);
                    a.set(r, q, new_rq);
                    a.set(q, r, new_rq);
                }
            }
        }
    }
    Err(Error::NonConvergence { residual: last_off, iterations: JACOBI_MAX_SWEEPS })
}
