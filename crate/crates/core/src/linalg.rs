//! Small dense symmetric matrices and a cyclic Jacobi eigenvalue solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major square matrix. Used for the shape operator and curvature
/// endomorphism along a geodesic, so sizes stay at 16 or below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    /// Eigenvalues of the symmetric part, sorted descending.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        jacobi_eigen(self, false).0
    }

    /// Eigenvalues (descending) and the matching orthonormal eigenvectors
    /// as columns.
    pub fn sym_eigen(&self) -> (Vec<f64>, Matrix) {
        let (vals, vecs) = jacobi_eigen(self, true);
        (vals, vecs.expect("eigenvectors requested"))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.n {
        for j in 0..a.n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations on the symmetric part of `m`.
fn jacobi_eigen(m: &Matrix, want_vectors: bool) -> (Vec<f64>, Option<Matrix>) {
    let n = m.n;
    let mut a = m.clone();
    a.symmetrize();
    let mut v = want_vectors.then(|| Matrix::identity(n));
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        if off_diagonal_norm(&a) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = v.map(|v| {
        let mut sorted = Matrix::zeros(n);
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                sorted[(k, col)] = v[(k, src)];
            }
        }
        sorted
    });
    (vals, vecs)
}

/// Rotation by `angle` in the `(i, j)` coordinate plane.
pub fn givens(n: usize, i: usize, j: usize, angle: f64) -> Matrix {
    let mut g = Matrix::identity(n);
    let (s, c) = angle.sin_cos();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}

/// Orthonormalize the columns of `m` (modified Gram-Schmidt).
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let n = m.n;
    let mut q = m.clone();
    for j in 0..n {
        for k in 0..j {
            let dot: f64 = (0..n).map(|r| q[(r, j)] * q[(r, k)]).sum();
            for r in 0..n {
                q[(r, j)] -= dot * q[(r, k)];
            }
        }
        let norm: f64 = (0..n).map(|r| q[(r, j)] * q[(r, j)]).sum::<f64>().sqrt();
        for r in 0..n {
            q[(r, j)] /= norm;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let m = Matrix::from_diagonal(&[1.0, 3.0, -2.0]);
        assert_eq!(m.sym_eigenvalues(), vec![3.0, 1.0, -2.0]);
    }

    #[test]
    fn two_by_two() {
        let m = Matrix::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = m.sym_eigenvalues();
        assert!((e[0] - 3.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn eigen_decomposition_reconstructs(entries in proptest::collection::vec(-5.0f64..5.0, 36)) {
            let mut m = Matrix::from_row_major(6, entries).unwrap();
            m.symmetrize();
            let (vals, vecs) = m.sym_eigen();
            let d = Matrix::from_diagonal(&vals);
            let rec = vecs.matmul(&d).matmul(&vecs.transpose());
            prop_assert!(rec.sub(&m).max_abs() < 1e-10);
            let trace: f64 = (0..6).map(|i| m[(i, i)]).sum();
            prop_assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-10);
            prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn givens_is_orthogonal() {
        let g = givens(4, 1, 3, 0.7);
        let id = g.matmul(&g.transpose());
        assert!(id.sub(&Matrix::identity(4)).max_abs() < 1e-15);
    }
}
