//! Dense rank-3 arrays and a few small matrix helpers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense `n × n × n` array indexed as `t[(a, b, c)]`.
///
/// The first index is the upper one in both uses inside this crate:
/// structure constants `p^k_ij` are stored at `(k, i, j)` and connection
/// coefficients `Γ^i_kj` at `(i, k, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t[(a, b, c)] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Swaps the last two indices.
    pub fn transpose_lower(&self) -> Self {
        Self::from_fn(self.n, |a, b, c| self[(a, c, b)])
    }

    /// Matrix slice with the middle index fixed: `(a, c) ↦ t[(a, b, c)]`.
    pub fn slice_middle(&self, b: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |a, c| self[(a, b, c)])
    }

    /// Contracts the middle index against `v`: `(a, c) ↦ t[(a, m, c)] v[m]`.
    pub fn contract_middle(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |a, c| (0..n).map(|m| self[(a, m, c)] * v[m]).sum())
    }

    /// Contracts the last index against `v`: `(a, b) ↦ t[(a, b, m)] v[m]`.
    pub fn contract_last(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |a, b| (0..n).map(|m| self[(a, b, m)] * v[m]).sum())
    }

    fn offset(&self, a: usize, b: usize, c: usize) -> usize {
        debug_assert!(a < self.n && b < self.n && c < self.n);
        (a * self.n + b) * self.n + c
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    fn index(&self, (a, b, c): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(a, b, c)]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (a, b, c): (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(a, b, c);
        &mut self.data[o]
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

pub fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(Error::SingularMatrix(what))
}

/// Solves `m x = rhs` by LU.
pub fn solve(m: &DMatrix<f64>, rhs: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let b = nalgebra::DVector::from_column_slice(rhs);
    m.clone().lu().solve(&b).map(|x| x.iter().copied().collect()).ok_or(Error::SingularMatrix(what))
}

pub fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
