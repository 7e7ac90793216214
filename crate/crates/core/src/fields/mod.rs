//! Vector fields with gamma-objects and the calculus of generalized-analytic
//! pairs `{f^i, γ^i_k}`.
//!
//! Fields are closures over points; a jacobian may be supplied analytically,
//! otherwise central finite differences per [`DiffConfig`] are used.

mod calculus;
mod catalog;
mod chain;
mod diff;
mod integral;
mod pairs;
mod transform;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::algebra::StructureConstants;
use crate::error::{Error, Result};
use crate::tensor::{self, Tensor3};

pub use calculus::{
    connection_residual, covariant_derivative, cr_residual, cr_sweep, derivative, derivative_from_nabla,
    gamma_from_prescribed, gamma_symmetry_residual, path_independence_residual, DerivativeForm,
};
pub use catalog::{
    componentwise_exp, componentwise_power, constant_field, coordinate_monomial, identity_field, linear_field,
    RandomField,
};
pub use chain::{
    chain_conditions, derivative_chain, product_connection_residual, scaled_structure_connection, ChainResiduals,
};
pub use diff::{fd_gradient, fd_jacobian, fd_mixed_second};
pub use integral::{line_integral, Path};
pub use pairs::{
    compose_pair, identity_pair, pair_combine, pair_compose, pair_product, pair_quotient, quotient_pair, unit_pair,
    ExpFn, IdentityFn, PolyFunction, PolynomialFn, PowerFn, QuotientValue, ReciprocalFn,
};
pub use transform::{gamma_transform, Diffeo, IdentityMap, LinearMap, SineShear, SmoothRandomMap, Transformed};

pub(crate) type PointFn<T> = Arc<dyn Fn(&[f64]) -> T + Send + Sync>;

/// Axis-aligned box; infinite bounds mean unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Domain {
    pub fn unbounded(n: usize) -> Self {
        Self { min: vec![f64::NEG_INFINITY; n], max: vec![f64::INFINITY; n] }
    }

    pub fn boxed(min: Vec<f64>, max: Vec<f64>) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.min.len()
            && x.iter().zip(self.min.iter().zip(&self.max)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        tensor::check_dim(self.min.len(), x.len())?;
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: x.to_vec() })
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            min: self.min.iter().zip(&other.min).map(|(a, b)| a.max(*b)).collect(),
            max: self.max.iter().zip(&other.max).map(|(a, b)| a.min(*b)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffScheme {
    Central2,
    Central4,
}

/// Finite-difference and quadrature settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffConfig {
    /// Base step; the step along axis `k` is `h · max(1, |x_k|)`.
    pub h: f64,
    pub scheme: DiffScheme,
    pub tol_residual: f64,
    /// Simpson panels per path piece.
    pub quadrature_segments: usize,
    /// Use a field's analytic jacobian when it has one.
    pub use_analytic: bool,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            h: f64::EPSILON.cbrt(),
            scheme: DiffScheme::Central2,
            tol_residual: 1e-7,
            quadrature_segments: 512,
            use_analytic: true,
        }
    }
}

impl DiffConfig {
    /// Fourth-order central differences with the matching optimal step.
    pub fn central4() -> Self {
        Self { h: f64::EPSILON.powf(0.2), scheme: DiffScheme::Central4, ..Self::default() }
    }

    /// Ignore analytic jacobians and always difference numerically.
    pub fn fd_only(self) -> Self {
        Self { use_analytic: false, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::Invalid(format!("FD step must be positive, got {}", self.h)));
        }
        if self.quadrature_segments == 0 {
            return Err(Error::Invalid("quadrature_segments must be at least 1".into()));
        }
        Ok(())
    }
}

/// `x ↦ f^i(x)` with an optional analytic jacobian `J[(i, k)] = ∂f^i/∂x^k`.
#[derive(Clone)]
pub struct VectorField {
    n: usize,
    eval: PointFn<Vec<f64>>,
    jacobian: Option<PointFn<DMatrix<f64>>>,
    domain: Domain,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("n", &self.n)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl VectorField {
    pub fn new(n: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(eval), jacobian: None, domain: Domain::unbounded(n) }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Drops the analytic jacobian so every derivative is differenced.
    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    pub fn analytic_jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.jacobian.as_ref().map(|j| j(x))
    }

    pub fn jacobian(&self, x: &[f64], cfg: &DiffConfig) -> DMatrix<f64> {
        match (&self.jacobian, cfg.use_analytic) {
            (Some(j), true) => j(x),
            _ => diff::fd_jacobian(|p| self.eval(p), x, cfg),
        }
    }

    pub(crate) fn eval_fn(&self) -> PointFn<Vec<f64>> {
        self.eval.clone()
    }

    pub(crate) fn jacobian_fn(&self) -> Option<PointFn<DMatrix<f64>>> {
        self.jacobian.clone()
    }
}

/// `x ↦ γ^i_k(x)`, stored as a matrix with rows `i` and columns `k`.
#[derive(Clone)]
pub struct GammaField {
    n: usize,
    eval: PointFn<DMatrix<f64>>,
}

impl fmt::Debug for GammaField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GammaField").field("n", &self.n).finish()
    }
}

impl GammaField {
    pub fn new(n: usize, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(eval) }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(n, move |_| DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.eval)(x)
    }

    pub(crate) fn eval_fn(&self) -> PointFn<DMatrix<f64>> {
        self.eval.clone()
    }
}

/// Scalar field with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    value: PointFn<f64>,
    gradient: Option<PointFn<Vec<f64>>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("analytic_gradient", &self.gradient.is_some()).finish()
    }
}

impl ScalarField {
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), gradient: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_gradient(|x| vec![0.0; x.len()])
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &[f64], cfg: &DiffConfig) -> Vec<f64> {
        match (&self.gradient, cfg.use_analytic) {
            (Some(g), true) => g(x),
            _ => diff::fd_gradient(|p| self.value(p), x, cfg),
        }
    }
}

/// Position-dependent coefficients `Γ^i_kj`, stored at `(i, k, j)`.
#[derive(Clone)]
pub struct ConnectionField {
    n: usize,
    eval: PointFn<Tensor3>,
}

impl fmt::Debug for ConnectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionField").field("n", &self.n).finish()
    }
}

impl ConnectionField {
    pub fn new(n: usize, eval: impl Fn(&[f64]) -> Tensor3 + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(eval) }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(n, move |_| Tensor3::zeros(n))
    }

    pub fn constant(t: Tensor3) -> Self {
        let n = t.dim();
        Self::new(n, move |_| t.clone())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> Tensor3 {
        (self.eval)(x)
    }
}

/// A vector field with its gamma-object in a fixed poly-number system.
#[derive(Clone, Debug)]
pub struct GAPair {
    pub f: VectorField,
    pub gamma: GammaField,
    pub algebra: Arc<StructureConstants>,
}

impl GAPair {
    pub fn new(f: VectorField, gamma: GammaField, algebra: Arc<StructureConstants>) -> Result<Self> {
        let n = algebra.n();
        tensor::check_dim(n, f.dim())?;
        tensor::check_dim(n, gamma.dim())?;
        Ok(Self { f, gamma, algebra })
    }

    /// The pair `{f, 0}`.
    pub fn analytic(f: VectorField, algebra: Arc<StructureConstants>) -> Result<Self> {
        let n = f.dim();
        Self::new(f, GammaField::zero(n), algebra)
    }

    pub fn dim(&self) -> usize {
        self.algebra.n()
    }

    pub(crate) fn same_algebra(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
