//! Small linear-algebra helpers: sorted Hermitian eigensolves, Kronecker
//! products and a banded Cholesky factorization for the field solver.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};
use crate::C64;

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = h.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    let mut values: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `a ⊗ b`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Largest `|h - h^†|` entry.
pub fn hermiticity_error(h: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).modulus());
        }
    }
    worst
}

/// Symmetric positive-definite matrix stored by rows of its lower band.
///
/// Row `i` keeps columns `i - bandwidth ..= i`; entries left of column 0
/// stay zero.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandedSpd {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (self.bandwidth - (i - j))
    }

    /// Add `v` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// In-place Cholesky factorization `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let w = self.bandwidth + 1;
        for i in 0..self.n {
            let row_start = i.saturating_sub(self.bandwidth);
            for j in row_start..=i {
                // Columns k < j shared by rows i and j.
                let k0 = row_start.max(j.saturating_sub(self.bandwidth));
                let len = j - k0;
                let ri = i * w + (self.bandwidth - (i - k0));
                let rj = j * w + (self.bandwidth - (j - k0));
                let mut dot = 0.0;
                for t in 0..len {
                    dot += self.data[ri + t] * self.data[rj + t];
                }
                let s = self.slot(i, j);
                let v = self.data[s] - dot;
                if i == j {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::Numeric(alloc::format!(
                            "matrix not positive definite at row {i}"
                        )));
                    }
                    self.data[s] = crate::math::sqrt(v);
                } else {
                    let d = self.data[self.slot(j, j)];
                    self.data[s] = v / d;
                }
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

/// Factor produced by [`BandedSpd::cholesky`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: BandedSpd,
}

impl BandCholesky {
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let n = f.n;
        let bw = f.bandwidth;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let k0 = i.saturating_sub(bw);
            let mut acc = y[i];
            for k in k0..i {
                acc -= f.data[f.slot(i, k)] * y[k];
            }
            y[i] = acc / f.data[f.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            let k1 = (i + bw).min(n - 1);
            for k in i + 1..=k1 {
                acc -= f.data[f.slot(k, i)] * y[k];
            }
            y[i] = acc / f.data[f.slot(i, i)];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_cholesky_matches_dense_solve() {
        let n = 40;
        let bw = 3;
        let mut band = BandedSpd::zeros(n, bw);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            band.add(i, i, 10.0 + i as f64 * 0.1);
            dense[(i, i)] = 10.0 + i as f64 * 0.1;
            for d in 1..=bw {
                if i + d < n {
                    let v = -1.0 / (d as f64 + 0.5) + 0.01 * i as f64;
                    band.add(i + d, i, v);
                    dense[(i + d, i)] = v;
                    dense[(i, i + d)] = v;
                }
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| libm::sin(i as f64)).collect();
        let x = band.clone().cholesky().unwrap().solve(&rhs);
        let expected = dense.lu().solve(&nalgebra::DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - expected[i]).abs() < 1e-12);
        }
        assert_eq!(band.get(5, 2), band.get(2, 5));
        assert_eq!(band.get(10, 2), 0.0);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let mut band = BandedSpd::zeros(2, 1);
        band.add(0, 0, 1.0);
        band.add(1, 1, 1.0);
        band.add(1, 0, 2.0);
        assert!(band.cholesky().is_err());
    }
}
