//! Covariant derivatives, the derivative `F'` and Cauchy–Riemann residuals.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{check_finite, ConnectionField, DiffConfig, GAPair, GammaField, VectorField};
use crate::algebra::{q_tensor, StructureConstants};
use crate::error::Result;
use crate::grid::{self, Grid, Norms, Sweep};
use crate::tensor::{self, Tensor3};

/// How `F'` is extracted from `∇̃_k f^i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeForm {
    /// `f'^i = u^k ∇̃_k f^i` with `u` the unit; `∇̃_1 f^i` when `e_1 = 1`.
    UnitDirection,
    /// `f'^i = q^is p^r_sm ∇̃_r f^m`; needs a nonsingular q-tensor.
    Invariant,
}

impl DerivativeForm {
    /// `UnitDirection` when a basis element is the unit, otherwise
    /// `Invariant` when q is nonsingular, otherwise `UnitDirection`.
    pub fn natural(s: &StructureConstants) -> Result<Self> {
        if s.unit_index().is_some() {
            return Ok(Self::UnitDirection);
        }
        if q_tensor(s, 1e-12).q_inv.is_some() {
            return Ok(Self::Invariant);
        }
        s.unit_or_err().map(|_| Self::UnitDirection)
    }
}

fn check_point(pair: &GAPair, x: &[f64]) -> Result<()> {
    tensor::check_dim(pair.dim(), x.len())?;
    pair.f.domain().check(x)
}

/// `∇̃_k f^i = ∂f^i/∂x^k + γ^i_k`, rows `i`, columns `k`.
pub fn covariant_derivative(pair: &GAPair, x: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>> {
    check_point(pair, x)?;
    let nabla = pair.f.jacobian(x, cfg) + pair.gamma.eval(x);
    check_finite(nabla.as_slice(), "covariant derivative")?;
    Ok(nabla)
}

pub fn derivative_from_nabla(nabla: &DMatrix<f64>, s: &StructureConstants, form: DerivativeForm) -> Result<Vec<f64>> {
    let n = s.n();
    match form {
        DerivativeForm::UnitDirection => {
            let u = s.unit_or_err()?;
            Ok(tensor::mat_vec(nabla, u))
        }
        DerivativeForm::Invariant => {
            let q = q_tensor(s, 1e-12);
            let q_inv = q.inverse()?;
            let v: Vec<f64> = (0..n)
                .map(|sidx| {
                    let mut acc = 0.0;
                    for r in 0..n {
                        for m in 0..n {
                            acc += s.p(r, sidx, m) * nabla[(m, r)];
                        }
                    }
                    acc
                })
                .collect();
            Ok(tensor::mat_vec(q_inv, &v))
        }
    }
}

/// `F'` of the pair at `x` in the requested form.
pub fn derivative(pair: &GAPair, x: &[f64], cfg: &DiffConfig, form: DerivativeForm) -> Result<Vec<f64>> {
    let nabla = covariant_derivative(pair, x, cfg)?;
    derivative_from_nabla(&nabla, &pair.algebra, form)
}

/// `R^i_k = ∇̃_k f^i − p^i_kj f'^j` with `F'` in the algebra's natural form.
pub fn cr_residual(pair: &GAPair, x: &[f64], cfg: &DiffConfig) -> Result<DMatrix<f64>> {
    let s = &pair.algebra;
    let nabla = covariant_derivative(pair, x, cfg)?;
    let fp = derivative_from_nabla(&nabla, s, DerivativeForm::natural(s)?)?;
    let n = s.n();
    Ok(DMatrix::from_fn(n, n, |i, k| nabla[(i, k)] - (0..n).map(|j| s.p(i, k, j) * fp[j]).sum::<f64>()))
}

/// [`cr_residual`] norms at every grid point.
pub fn cr_sweep(pair: &GAPair, grid: &Grid, cfg: &DiffConfig) -> Result<Sweep> {
    grid::sweep(grid, |x| Ok(Norms::of(cr_residual(pair, x, cfg)?.as_slice())))
}

/// The pair `{f, −∂f + p·f'}` built from a field and a prescribed derivative.
pub fn gamma_from_prescribed(f: &VectorField, fprime: &VectorField, s: Arc<StructureConstants>) -> Result<GAPair> {
    let n = s.n();
    tensor::check_dim(n, f.dim())?;
    tensor::check_dim(n, fprime.dim())?;
    let field = f.clone();
    let fp = fprime.clone();
    let alg = s.clone();
    let cfg = DiffConfig::default();
    let gamma = GammaField::new(n, move |x| {
        let jac = field.jacobian(x, &cfg);
        let d = fp.eval(x);
        DMatrix::from_fn(n, n, |i, k| -jac[(i, k)] + (0..n).map(|j| alg.p(i, k, j) * d[j]).sum::<f64>())
    });
    let domain = f.domain().intersect(fprime.domain());
    GAPair::new(f.clone().with_domain(domain), gamma, s)
}

/// `Γ^i_kj f^j − γ^i_k`: how far the pair is from the subset with connection `Γ`.
pub fn connection_residual(pair: &GAPair, conn: &ConnectionField, x: &[f64]) -> Result<DMatrix<f64>> {
    check_point(pair, x)?;
    tensor::check_dim(pair.dim(), conn.dim())?;
    let f = pair.f.eval(x);
    let gamma = pair.gamma.eval(x);
    Ok(conn.eval(x).contract_last(&f) - gamma)
}

/// `P^i_km = p^i_kj ∂f^j/∂x^m − p^i_mj ∂f^j/∂x^k`, stored at `(i, k, m)`.
pub fn path_independence_residual(pair: &GAPair, x: &[f64], cfg: &DiffConfig) -> Result<Tensor3> {
    check_point(pair, x)?;
    let s = &pair.algebra;
    let n = s.n();
    let jac = pair.f.jacobian(x, cfg);
    check_finite(jac.as_slice(), "jacobian")?;
    Ok(Tensor3::from_fn(n, |i, k, m| (0..n).map(|j| s.p(i, k, j) * jac[(j, m)] - s.p(i, m, j) * jac[(j, k)]).sum()))
}

/// `p^i_kj γ^j_m − p^i_mj γ^j_k` at `(i, k, m)`, the gamma form of the
/// path-independence condition.
pub fn gamma_symmetry_residual(pair: &GAPair, x: &[f64]) -> Result<Tensor3> {
    check_point(pair, x)?;
    let s = &pair.algebra;
    let n = s.n();
    let g = pair.gamma.eval(x);
    Ok(Tensor3::from_fn(n, |i, k, m| (0..n).map(|j| s.p(i, k, j) * g[(j, m)] - s.p(i, m, j) * g[(j, k)]).sum()))
}
