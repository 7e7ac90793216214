//! Poly-number systems described by structure constants `p^k_ij`.
//!
//! A system is a finite-dimensional real algebra with basis `e_1..e_n` and
//! products `e_i e_j = p^k_ij e_k`. Only associative-commutative systems are
//! meaningful for the calculus in [`crate::fields`]; [`verify_structure`]
//! reports how far a table is from that.

mod builtin;
mod json;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{self, Tensor3};

pub use builtin::{bicomplex, builtin, complex, cyclic3, diag, dual, h4_e, h4_psi, nil3, split_complex, BUILTIN_NAMES};
pub use json::{AlgebraDocument, AlgebraEntry};

/// Zero-divisor threshold factor on `|det M(a)|`.
pub const ZERO_DIVISOR_TOL: f64 = 1e-12;

/// Axiom tolerance for tables that are not exact integers.
pub const USER_AXIOM_TOL: f64 = 1e-12;

/// Opaque label naming the basis a coordinate vector refers to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisTag(Arc<str>);

impl BasisTag {
    pub fn new(name: &str) -> Self {
        Self(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BasisTag {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// Structure constants of a poly-number system together with its unit.
///
/// The unit is kept as a coordinate vector: in bases such as H4's idempotent
/// basis no single basis element acts as 1 (there the unit is `(1,1,1,1)`).
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    tag: BasisTag,
    p: Tensor3,
    unit: Option<Vec<f64>>,
}

impl StructureConstants {
    /// `p[(k, i, j)] = p^k_ij`; `unit_index` is 0-based.
    pub fn new(tag: impl Into<BasisTag>, p: Tensor3, unit_index: Option<usize>) -> Result<Self> {
        let n = p.dim();
        if n == 0 {
            return Err(Error::Invalid("algebra dimension must be positive".into()));
        }
        let unit = match unit_index {
            Some(u) if u >= n => return Err(Error::Invalid(format!("unit index {} out of range for n = {n}", u + 1))),
            Some(u) => Some(basis_vector(n, u)),
            None => None,
        };
        Ok(Self { tag: tag.into(), p, unit })
    }

    /// Like [`StructureConstants::new`] but with the unit given in coordinates.
    pub fn with_unit(tag: impl Into<BasisTag>, p: Tensor3, unit: Option<Vec<f64>>) -> Result<Self> {
        let n = p.dim();
        if n == 0 {
            return Err(Error::Invalid("algebra dimension must be positive".into()));
        }
        if let Some(u) = &unit {
            tensor::check_dim(n, u.len())?;
        }
        Ok(Self { tag: tag.into(), p, unit })
    }

    pub fn n(&self) -> usize {
        self.p.dim()
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    /// `p^k_ij` with 0-based indices.
    pub fn p(&self, k: usize, i: usize, j: usize) -> f64 {
        self.p[(k, i, j)]
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.p
    }

    pub fn unit(&self) -> Option<&[f64]> {
        self.unit.as_deref()
    }

    /// Index of the basis element equal to the unit, if there is one.
    pub fn unit_index(&self) -> Option<usize> {
        let u = self.unit.as_ref()?;
        let hot: Vec<usize> = u.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        match hot.as_slice() {
            [i] if u[*i] == 1.0 => Some(*i),
            _ => None,
        }
    }

    pub fn unit_or_err(&self) -> Result<&[f64]> {
        self.unit().ok_or(Error::NoUnit)
    }

    /// Returns 0 for exact integer tables and [`USER_AXIOM_TOL`] otherwise.
    pub fn default_axiom_tol(&self) -> f64 {
        let integral = self.p.as_slice().iter().all(|v| v.fract() == 0.0)
            && self.unit.as_ref().is_none_or(|u| u.iter().all(|v| v.fract() == 0.0));
        if integral {
            0.0
        } else {
            USER_AXIOM_TOL
        }
    }

    /// Unchecked product of raw coordinate vectors: `c^k = a^i b^j p^k_ij`.
    pub fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                for (j, &bj) in b.iter().enumerate() {
                    acc += ai * bj * self.p[(k, i, j)];
                }
            }
            *o = acc;
        }
        out
    }

    /// `M(a)^i_j = p^i_jk a^k`, so that `M(a) b = a·b`.
    pub fn mult_matrix(&self, a: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| self.p[(i, j, k)] * a[k]).sum())
    }

    /// Wraps coordinates as an element of this system.
    pub fn element(&self, coords: Vec<f64>) -> Result<PolyNumber> {
        tensor::check_dim(self.n(), coords.len())?;
        Ok(PolyNumber::new(coords, self.tag.clone()))
    }

    pub fn unit_element(&self) -> Result<PolyNumber> {
        Ok(PolyNumber::new(self.unit_or_err()?.to_vec(), self.tag.clone()))
    }

    fn check_element(&self, a: &PolyNumber) -> Result<()> {
        if a.tag != self.tag {
            return Err(Error::BasisMismatch { left: a.tag.to_string(), right: self.tag.to_string() });
        }
        tensor::check_dim(self.n(), a.coords.len())
    }
}

pub(crate) fn basis_vector(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Coordinates of a poly-number with the basis they refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyNumber {
    coords: Vec<f64>,
    tag: BasisTag,
}

impl PolyNumber {
    pub fn new(coords: Vec<f64>, tag: BasisTag) -> Self {
        Self { coords, tag }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch { left: self.tag.to_string(), right: other.tag.to_string() });
        }
        tensor::check_dim(self.n(), other.n())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(), self.tag.clone()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(), self.tag.clone()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coords.iter().map(|a| c * a).collect(), self.tag.clone())
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Poly-number product `a·b` in the system `s`.
pub fn multiply(a: &PolyNumber, b: &PolyNumber, s: &StructureConstants) -> Result<PolyNumber> {
    s.check_element(a)?;
    s.check_element(b)?;
    Ok(PolyNumber::new(s.mul(&a.coords, &b.coords), s.tag.clone()))
}

/// Max-abs residuals of the algebra axioms and their pass flags.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub commutativity: f64,
    /// Residual of `p^r_im p^m_kj = p^r_km p^m_ij`.
    pub associativity: f64,
    /// Residual of `u^k p^i_kj = δ^i_j`; `None` when the system has no unit.
    pub unit: Option<f64>,
    pub tol: f64,
    pub commutative: bool,
    pub associative: bool,
    pub unital: bool,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.commutative && self.associative && self.unital
    }
}

pub fn verify_structure(s: &StructureConstants, tol: f64) -> AxiomReport {
    let n = s.n();
    let p = &s.p;
    let mut comm = 0.0_f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                comm = comm.max((p[(k, i, j)] - p[(k, j, i)]).abs());
            }
        }
    }

    let mut assoc = 0.0_f64;
    for r in 0..n {
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let mut lhs = 0.0;
                    let mut rhs = 0.0;
                    for m in 0..n {
                        lhs += p[(r, i, m)] * p[(m, k, j)];
                        rhs += p[(r, k, m)] * p[(m, i, j)];
                    }
                    assoc = assoc.max((lhs - rhs).abs());
                }
            }
        }
    }

    let unit = s.unit().map(|u| {
        let mut res = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| u[k] * p[(i, k, j)]).sum();
                let delta = if i == j { 1.0 } else { 0.0 };
                res = res.max((v - delta).abs());
            }
        }
        res
    });

    AxiomReport {
        commutativity: comm,
        associativity: assoc,
        unit,
        tol,
        commutative: comm <= tol,
        associative: assoc <= tol,
        unital: unit.is_none_or(|r| r <= tol),
    }
}

/// The contraction `q_ij = p^r_im p^m_rj` and, when nonsingular, its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct QTensor {
    pub q: DMatrix<f64>,
    pub det: f64,
    pub q_inv: Option<DMatrix<f64>>,
}

impl QTensor {
    pub fn inverse(&self) -> Result<&DMatrix<f64>> {
        self.q_inv.as_ref().ok_or(Error::SingularQ)
    }
}

/// `q_inv` is present iff `|det q| > tol·max(1, max|q_ij|)^n`.
pub fn q_tensor(s: &StructureConstants, tol: f64) -> QTensor {
    let n = s.n();
    let p = &s.p;
    let q = DMatrix::from_fn(n, n, |i, j| {
        let mut acc = 0.0;
        for r in 0..n {
            for m in 0..n {
                acc += p[(r, i, m)] * p[(m, r, j)];
            }
        }
        acc
    });
    let det = q.determinant();
    let scale = tensor::max_abs(&q).max(1.0).powi(n as i32);
    let q_inv = if det.abs() > tol * scale { q.clone().try_inverse() } else { None };
    QTensor { q, det, q_inv }
}

/// Multiplication operator `M(a)` with `M(a)^i_j = p^i_jk a^k`.
pub fn mult_operator(a: &PolyNumber, s: &StructureConstants) -> Result<DMatrix<f64>> {
    s.check_element(a)?;
    Ok(s.mult_matrix(&a.coords))
}

pub fn is_zero_divisor(a: &PolyNumber, s: &StructureConstants, tol: f64) -> Result<bool> {
    let m = mult_operator(a, s)?;
    Ok(zero_divisor_det(&m, a.norm(), tol).is_some())
}

/// Returns `Some(det)` when `|det m| ≤ tol·max(1, norm)^n`.
fn zero_divisor_det(m: &DMatrix<f64>, norm: f64, tol: f64) -> Option<f64> {
    let det = m.determinant();
    let bound = tol * norm.max(1.0).powi(m.nrows() as i32);
    (det.abs() <= bound).then_some(det)
}

/// Raw-coordinate inverse used by the field calculus.
pub(crate) fn invert_raw(a: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
    let unit = s.unit_or_err()?;
    let m = s.mult_matrix(a);
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if let Some(det) = zero_divisor_det(&m, norm, ZERO_DIVISOR_TOL) {
        return Err(Error::ZeroDivisor { det });
    }
    tensor::solve(&m, unit, "poly-number inversion")
}

/// `b` with `a·b = 1`.
pub fn invert(a: &PolyNumber, s: &StructureConstants) -> Result<PolyNumber> {
    s.check_element(a)?;
    Ok(PolyNumber::new(invert_raw(&a.coords, s)?, s.tag.clone()))
}

/// Linear change of basis: new coordinates are `s · old`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisChange {
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
    from: BasisTag,
    to: BasisTag,
}

impl BasisChange {
    pub fn new(s: DMatrix<f64>, from: impl Into<BasisTag>, to: impl Into<BasisTag>) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::Invalid("basis change matrix must be square".into()));
        }
        let s_inv = tensor::inverse(&s, "basis change")?;
        Ok(Self { s, s_inv, from: from.into(), to: to.into() })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.s_inv
    }

    pub fn from_tag(&self) -> &BasisTag {
        &self.from
    }

    pub fn to_tag(&self) -> &BasisTag {
        &self.to
    }

    pub fn inverse(&self) -> Self {
        Self { s: self.s_inv.clone(), s_inv: self.s.clone(), from: self.to.clone(), to: self.from.clone() }
    }
}

pub fn change_basis(x: &PolyNumber, b: &BasisChange) -> Result<PolyNumber> {
    if x.tag != b.from {
        return Err(Error::BasisMismatch { left: x.tag.to_string(), right: b.from.to_string() });
    }
    tensor::check_dim(b.s.nrows(), x.n())?;
    Ok(PolyNumber::new(tensor::mat_vec(&b.s, &x.coords), b.to.clone()))
}

/// Structure constants of the same algebra expressed in the target basis:
/// `p'^c_ab = s^c_k p^k_ij (s⁻¹)^i_a (s⁻¹)^j_b`.
pub fn transform_constants(s: &StructureConstants, b: &BasisChange) -> Result<StructureConstants> {
    if s.tag != b.from {
        return Err(Error::BasisMismatch { left: s.tag.to_string(), right: b.from.to_string() });
    }
    let n = s.n();
    tensor::check_dim(n, b.s.nrows())?;
    let fwd = &b.s;
    let inv = &b.s_inv;
    // Contract one index at a time to keep this O(n^4).
    let mut t1 = Tensor3::zeros(n); // t1[k][a][j] = p^k_ij inv^i_a
    for k in 0..n {
        for a in 0..n {
            for j in 0..n {
                t1[(k, a, j)] = (0..n).map(|i| s.p[(k, i, j)] * inv[(i, a)]).sum();
            }
        }
    }
    let mut t2 = Tensor3::zeros(n); // t2[k][a][b] = t1[k][a][j] inv^j_b
    for k in 0..n {
        for a in 0..n {
            for bb in 0..n {
                t2[(k, a, bb)] = (0..n).map(|j| t1[(k, a, j)] * inv[(j, bb)]).sum();
            }
        }
    }
    let p = Tensor3::from_fn(n, |c, a, bb| (0..n).map(|k| fwd[(c, k)] * t2[(k, a, bb)]).sum());
    let unit = s.unit.as_ref().map(|u| tensor::mat_vec(fwd, u));
    StructureConstants::with_unit(b.to.clone(), p, unit)
}

/// Horner evaluation of `Σ c_m X^m`.
pub fn poly_eval(coeffs: &[PolyNumber], x: &PolyNumber, s: &StructureConstants) -> Result<PolyNumber> {
    s.check_element(x)?;
    let Some((last, rest)) = coeffs.split_last() else {
        return Ok(PolyNumber::new(vec![0.0; s.n()], s.tag.clone()));
    };
    s.check_element(last)?;
    let mut acc = last.coords.clone();
    for c in rest.iter().rev() {
        s.check_element(c)?;
        acc = s.mul(&acc, &x.coords);
        for (a, ci) in acc.iter_mut().zip(&c.coords) {
            *a += ci;
        }
    }
    Ok(PolyNumber::new(acc, s.tag.clone()))
}
