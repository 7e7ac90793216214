//! The generalized-analytic family with requirement-(3) gamma
//! `γ^i_k = −∂_kφ^i + p^i_kj μ^j φ^j` whose gamma is also `Γ^i_kj φ^j` for the
//! metric connection, verified by residual rather than by trusting the
//! closed form.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{gamma_matrices, metric_connection, FinslerConfig, Orientation};
use crate::algebra::{h4_psi, q_tensor, StructureConstants};
use crate::error::{Error, Result};
use crate::fields::{
    cr_residual, fd_jacobian, fd_mixed_second, ConnectionField, DiffConfig, GAPair, GammaField, ScalarField,
    VectorField,
};
use crate::grid::{sweep, Grid, Norms};
use crate::tensor::{self, Tensor3};

/// One-variable profile `b(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "c", rename_all = "kebab-case")]
pub enum BProfile {
    Constant(f64),
    /// `1 + c·t²`.
    Quadratic(f64),
    /// `exp(c·t²)`; with `c = 1` for every axis this reproduces the Gaussian κ.
    Gaussian(f64),
}

impl Default for BProfile {
    fn default() -> Self {
        Self::Constant(1.0)
    }
}

impl BProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Quadratic(c) => 1.0 + c * t * t,
            Self::Gaussian(c) => (c * t * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::Quadratic(c) => 2.0 * c * t,
            Self::Gaussian(c) => 2.0 * c * t * (c * t * t).exp(),
        }
    }

    /// `a(t) = ln|b(t)|`.
    pub fn exponent(&self, t: f64) -> Result<f64> {
        let b = self.value(t);
        if b == 0.0 || !b.is_finite() {
            return Err(Error::NonPositive { what: "|b_i|", value: b.abs() });
        }
        Ok(b.abs().ln())
    }

    /// `a'(t) = b'/b`.
    pub fn exponent_derivative(&self, t: f64) -> f64 {
        self.derivative(t) / self.value(t)
    }
}

/// Placement of `b_i` in the closed form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `φ^i ∝ b_i(ξ^i)`.
    AsPrinted,
    /// `φ^i ∝ 1/b_i(ξ^i)`; this is what integrating the defining system gives.
    #[default]
    Reciprocal,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::AsPrinted, Convention::Reciprocal];

    pub fn name(&self) -> &'static str {
        match self {
            Self::AsPrinted => "as-printed",
            Self::Reciprocal => "reciprocal",
        }
    }
}

/// The gauge `λ(ξ)` used with the family's κ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum LambdaModel {
    /// `λ ≡ λ₀`.
    #[default]
    Reference,
    Constant(f64),
    /// `λ/λ₀ = (κ₀/κ)⁴`, which makes the family analytic.
    AnalyticReduction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct H4FamilySpec {
    pub phi0: [f64; 4],
    pub mu: [f64; 4],
    pub b: [BProfile; 4],
    pub lambda: LambdaModel,
    pub kappa0: f64,
    pub lambda0: f64,
    /// Adds `c·ξ¹ξ²` to `ln(κ/κ₀)⁴`; any `c ≠ 0` breaks separability.
    pub cross_coupling: f64,
    pub convention: Convention,
}

impl Default for H4FamilySpec {
    fn default() -> Self {
        Self {
            phi0: [1.0; 4],
            mu: [0.0; 4],
            b: [BProfile::default(); 4],
            lambda: LambdaModel::Reference,
            kappa0: 1.0,
            lambda0: 1.0,
            cross_coupling: 0.0,
            convention: Convention::Reciprocal,
        }
    }
}

impl H4FamilySpec {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("kappa0", self.kappa0), ("lambda0", self.lambda0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive { what, value: v });
            }
        }
        if let LambdaModel::Constant(v) = self.lambda {
            if !(v > 0.0) {
                return Err(Error::NonPositive { what: "lambda", value: v });
            }
        }
        let all = self.phi0.iter().chain(&self.mu).chain([&self.cross_coupling]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("family parameters".into()));
        }
        Ok(())
    }

    /// `ln(κ/κ₀)⁴ = Σ a_m(ξ^m) + c ξ¹ξ²`.
    pub fn log_kappa4(&self, xi: &[f64]) -> Result<f64> {
        let mut s = self.cross_coupling * xi[0] * xi[1];
        for (b, &x) in self.b.iter().zip(xi) {
            s += b.exponent(x)?;
        }
        Ok(s)
    }

    fn log_kappa4_gradient(&self, xi: &[f64]) -> Vec<f64> {
        let c = self.cross_coupling;
        (0..4)
            .map(|m| {
                let cross = match m {
                    0 => c * xi[1],
                    1 => c * xi[0],
                    _ => 0.0,
                };
                self.b[m].exponent_derivative(xi[m]) + cross
            })
            .collect()
    }

    /// `ln(λ/λ₀)` and its gradient.
    fn log_lambda(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok(match self.lambda {
            LambdaModel::Reference => (0.0, vec![0.0; 4]),
            LambdaModel::Constant(v) => ((v / self.lambda0).ln(), vec![0.0; 4]),
            LambdaModel::AnalyticReduction => {
                (-self.log_kappa4(xi)?, self.log_kappa4_gradient(xi).iter().map(|g| -g).collect())
            }
        })
    }

    pub fn kappa_field(&self) -> ScalarField {
        let (a, b) = (self.clone(), self.clone());
        ScalarField::new(move |x| a.kappa0 * (a.log_kappa4(x).unwrap_or(f64::NAN) / 4.0).exp()).with_gradient(
            move |x| {
                let k = b.kappa0 * (b.log_kappa4(x).unwrap_or(f64::NAN) / 4.0).exp();
                b.log_kappa4_gradient(x).iter().map(|g| k * g / 4.0).collect()
            },
        )
    }

    pub fn lambda_field(&self) -> ScalarField {
        let (a, b) = (self.clone(), self.clone());
        ScalarField::new(move |x| a.lambda0 * a.log_lambda(x).map_or(f64::NAN, |v| v.0.exp())).with_gradient(move |x| {
            match b.log_lambda(x) {
                Ok((l, g)) => g.iter().map(|g| b.lambda0 * l.exp() * g).collect(),
                Err(_) => vec![f64::NAN; 4],
            }
        })
    }

    pub fn metric(&self) -> FinslerConfig {
        FinslerConfig::new(self.kappa_field(), self.lambda_field(), self.kappa0, self.lambda0)
    }
}

/// `κ = κ₀·exp(Σ a_m(ξ^m)/4)`.
pub fn family_kappa(a: &dyn Fn(usize, f64) -> f64, kappa0: f64, xi: &[f64]) -> f64 {
    kappa0 * (xi.iter().enumerate().map(|(m, &x)| a(m, x)).sum::<f64>() / 4.0).exp()
}

/// `∂²ln(κ/κ₀)⁴/∂ξ^i∂ξ^j` for `i ≠ j` by finite differences of `ln κ`;
/// the diagonal is reported as zero.
pub fn compatibility_residual(kappa: &ScalarField, xi: &[f64]) -> DMatrix<f64> {
    let mut h = fd_mixed_second(|x| 4.0 * kappa.value(x).ln(), xi);
    h.fill_diagonal(0.0);
    h
}

/// `φ^i = φ^i₀ (κ/κ₀)⁴ (λ/λ₀) B_i(ξ^i) exp(μ^i ξ^i)`.
pub fn family_phi(spec: &H4FamilySpec, convention: Convention, xi: &[f64]) -> Result<Vec<f64>> {
    tensor::check_dim(4, xi.len())?;
    let common = spec.log_kappa4(xi)? + spec.log_lambda(xi)?.0;
    (0..4)
        .map(|i| {
            let b = spec.b[i].value(xi[i]);
            spec.b[i].exponent(xi[i])?;
            let bi = match convention {
                Convention::AsPrinted => b,
                Convention::Reciprocal => 1.0 / b,
            };
            Ok(spec.phi0[i] * common.exp() * bi * (spec.mu[i] * xi[i]).exp())
        })
        .collect()
}

fn family_jacobian(spec: &H4FamilySpec, convention: Convention, xi: &[f64]) -> Result<DMatrix<f64>> {
    let phi = family_phi(spec, convention, xi)?;
    let mut common = spec.log_kappa4_gradient(xi);
    for (c, l) in common.iter_mut().zip(spec.log_lambda(xi)?.1) {
        *c += l;
    }
    let sign = match convention {
        Convention::AsPrinted => 1.0,
        Convention::Reciprocal => -1.0,
    };
    Ok(DMatrix::from_fn(4, 4, |i, k| {
        let own = if i == k { sign * spec.b[i].exponent_derivative(xi[i]) + spec.mu[i] } else { 0.0 };
        phi[i] * (common[k] + own)
    }))
}

/// `φ` as a field with its analytic jacobian.
pub fn family_field(spec: &H4FamilySpec, convention: Convention) -> VectorField {
    let (a, b) = (spec.clone(), spec.clone());
    VectorField::new(4, move |x| family_phi(&a, convention, x).unwrap_or_else(|_| vec![f64::NAN; 4])).with_jacobian(
        move |x| family_jacobian(&b, convention, x).unwrap_or_else(|_| DMatrix::from_element(4, 4, f64::NAN)),
    )
}

/// The metric connection of the family's `(κ, λ)`, transposed orientation.
pub fn family_connection(spec: &H4FamilySpec) -> ConnectionField {
    metric_connection(&spec.metric(), Orientation::Transposed)
}

/// `{φ, −∂_kφ^i + p^i_kj μ^j φ^j}` over the ψ-basis, with the family's convention.
pub fn family_pair(spec: &H4FamilySpec) -> Result<GAPair> {
    spec.validate()?;
    let f = family_field(spec, spec.convention);
    let (field, mu) = (f.clone(), spec.mu);
    let gamma = GammaField::new(4, move |x| {
        let phi = field.eval(x);
        let j = field.analytic_jacobian(x).expect("family field has a jacobian");
        DMatrix::from_fn(4, 4, |i, k| -j[(i, k)] + if i == k { mu[i] * phi[i] } else { 0.0 })
    });
    GAPair::new(f, gamma, Arc::new(h4_psi()))
}

/// The sixteen relations `∂_kφ^i − δ_ik μ^i φ^i + Γ^i_kj φ^j` at one point.
/// `∂φ` is always differenced numerically with `cfg`'s scheme; `Γ` uses the
/// analytic gradients of κ and λ.
pub fn family_relations(
    spec: &H4FamilySpec,
    convention: Convention,
    xi: &[f64],
    cfg: &DiffConfig,
) -> Result<DMatrix<f64>> {
    let phi = family_phi(spec, convention, xi)?;
    let failed = RefCell::new(None);
    let j = fd_jacobian(
        |x| {
            family_phi(spec, convention, x).unwrap_or_else(|e| {
                failed.borrow_mut().get_or_insert(e);
                vec![f64::NAN; 4]
            })
        },
        xi,
        cfg,
    );
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let g = gamma_matrices(xi, &spec.metric(), Orientation::Transposed)?;
    let gphi = g.contract_last(&phi);
    Ok(DMatrix::from_fn(4, 4, |i, k| j[(i, k)] - if i == k { spec.mu[i] * phi[i] } else { 0.0 } + gphi[(i, k)]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyReport {
    pub as_printed: f64,
    pub reciprocal: f64,
    pub tol: f64,
    /// The unique convention under `tol`, if exactly one is.
    pub selected: Option<Convention>,
    pub points: usize,
}

impl FamilyReport {
    pub fn residual(&self, c: Convention) -> f64 {
        match c {
            Convention::AsPrinted => self.as_printed,
            Convention::Reciprocal => self.reciprocal,
        }
    }
}

/// Max-abs of the sixteen relations over `grid` for both conventions.
pub fn family_residual(spec: &H4FamilySpec, grid: &Grid, cfg: &DiffConfig) -> Result<FamilyReport> {
    spec.validate()?;
    tensor::check_dim(4, grid.dim())?;
    let run = |c| sweep(grid, |x| Ok(Norms::of(family_relations(spec, c, x, cfg)?.as_slice()))).map(|s| s.max);
    let as_printed = run(Convention::AsPrinted)?;
    let reciprocal = run(Convention::Reciprocal)?;
    let tol = cfg.tol_residual;
    let selected = match (as_printed < tol, reciprocal < tol) {
        (true, false) => Some(Convention::AsPrinted),
        (false, true) => Some(Convention::Reciprocal),
        _ => None,
    };
    Ok(FamilyReport { as_printed, reciprocal, tol, selected, points: grid.len() })
}

/// `∇̃` of `f` split as `p·d + γ̂`, where `d` is the invariant contraction of
/// `γ`; `γ̂` is the part no redefinition of the derivative can absorb.
fn non_absorbable(gamma: &DMatrix<f64>, s: &StructureConstants) -> Result<DMatrix<f64>> {
    let n = s.n();
    let q = q_tensor(s, 1e-12);
    let qi = q.inverse()?;
    let contracted: Vec<f64> = (0..n)
        .map(|sidx| {
            (0..n).flat_map(|r| (0..n).map(move |m| (r, m))).map(|(r, m)| s.p(r, sidx, m) * gamma[(m, r)]).sum()
        })
        .collect();
    let d = tensor::mat_vec(qi, &contracted);
    let pd = s.tensor().contract_last(&d);
    Ok(gamma - pd)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReductionReport {
    /// Max-abs of the non-absorbable part of `Γφ`.
    pub reconstructed_gamma: f64,
    /// Max-abs Cauchy–Riemann residual of `{φ, 0}`.
    pub analytic_residual: f64,
    pub points: usize,
}

/// Whether the family degenerates to an analytic function on `grid`.
pub fn analytic_reduction(spec: &H4FamilySpec, grid: &Grid, cfg: &DiffConfig) -> Result<ReductionReport> {
    spec.validate()?;
    let s = Arc::new(h4_psi());
    let conn = family_connection(spec);
    let bare = GAPair::analytic(family_field(spec, spec.convention), s.clone())?;
    let fd = cfg.fd_only();
    let gamma = sweep(grid, |x| {
        let phi = family_phi(spec, spec.convention, x)?;
        let g: Tensor3 = conn.eval(x);
        non_absorbable(&g.contract_last(&phi), &s).map(|m| Norms::of(m.as_slice()))
    })?;
    let cr = sweep(grid, |x| cr_residual(&bare, x, &fd).map(|m| Norms::of(m.as_slice())))?;
    Ok(ReductionReport { reconstructed_gamma: gamma.max, analytic_residual: cr.max, points: grid.len() })
}

/// The default verification box `[−0.5, 0.5]⁴` with three points per axis.
pub fn default_grid() -> Grid {
    Grid::cube(4, -0.5, 0.5, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::covariant_derivative;

    fn generic() -> H4FamilySpec {
        H4FamilySpec {
            phi0: [1.0, 0.5, -0.7, 2.0],
            mu: [0.3, -0.2, 0.1, 0.4],
            b: [
                BProfile::Quadratic(0.25),
                BProfile::Quadratic(0.5),
                BProfile::Gaussian(0.3),
                BProfile::Quadratic(-0.4),
            ],
            ..H4FamilySpec::default()
        }
    }

    #[test]
    fn trivial_profile_is_componentwise_exp() {
        let spec = H4FamilySpec { mu: [1.0, 0.0, 0.0, 0.0], ..H4FamilySpec::default() };
        let xi = [0.2, -0.1, 0.3, 0.4];
        for c in Convention::ALL {
            let phi = family_phi(&spec, c, &xi).unwrap();
            assert!(tensor::max_abs_diff(&phi, &[0.2f64.exp(), 1.0, 1.0, 1.0]) < 1e-15);
        }
        let r = family_residual(&spec, &default_grid(), &DiffConfig::default()).unwrap();
        assert!(r.as_printed < 1e-9 && r.reciprocal < 1e-9);
        assert_eq!(r.selected, None);
    }

    #[test]
    fn reciprocal_placement_solves_the_system() {
        let r = family_residual(&generic(), &default_grid(), &DiffConfig::default()).unwrap();
        assert!(r.reciprocal < 1e-7, "{r:?}");
        assert!(r.as_printed > 1e-3, "{r:?}");
        assert_eq!(r.selected, Some(Convention::Reciprocal));
    }

    #[test]
    fn non_separable_kappa_fails_both() {
        let spec = H4FamilySpec { cross_coupling: 0.8, ..generic() };
        let r = family_residual(&spec, &default_grid(), &DiffConfig::default()).unwrap();
        assert!(r.as_printed > 1e-3 && r.reciprocal > 1e-3, "{r:?}");
        let k = compatibility_residual(&spec.kappa_field(), &[0.1, 0.2, 0.3, 0.4]);
        assert!((k[(0, 1)] - 0.8).abs() < 1e-6);
        assert!(k[(2, 3)].abs() < 1e-6);
    }

    #[test]
    fn compatibility_examples() {
        let zero = ScalarField::new(|x| family_kappa(&|_, _| 0.0, 2.0, x));
        assert!(compatibility_residual(&zero, &[0.3; 4]).amax() < 1e-9);
        let gauss = ScalarField::new(|x| family_kappa(&|_, t| t * t, 2.0, x));
        assert!(compatibility_residual(&gauss, &[0.3, -0.2, 0.1, 0.4]).amax() < 1e-6);
        let cross = ScalarField::new(|x| (x[0] * x[1] / 4.0).exp());
        assert!((compatibility_residual(&cross, &[0.3, -0.2, 0.1, 0.4])[(0, 1)] - 1.0).abs() < 1e-6);
        // Gaussian profiles reproduce the Gaussian metric.
        let spec = H4FamilySpec { b: [BProfile::Gaussian(1.0); 4], kappa0: 4.0, ..H4FamilySpec::default() };
        let xi = [0.1, 0.2, -0.3, 0.4];
        let g = FinslerConfig::gaussian(4.0, 1.0);
        assert!((spec.kappa_field().value(&xi) - g.kappa.value(&xi)).abs() < 1e-14);
    }

    #[test]
    fn analytic_reduction_vanishes() {
        let spec = H4FamilySpec { lambda: LambdaModel::AnalyticReduction, ..generic() };
        let r = analytic_reduction(&spec, &default_grid(), &DiffConfig::default()).unwrap();
        assert!(r.reconstructed_gamma < 1e-8, "{r:?}");
        assert!(r.analytic_residual < 1e-8, "{r:?}");

        let generic = analytic_reduction(&generic(), &default_grid(), &DiffConfig::default()).unwrap();
        assert!(generic.reconstructed_gamma > 1e-3);
    }

    #[test]
    fn pair_gamma_matches_connection() {
        let spec = generic();
        let pair = family_pair(&spec).unwrap();
        let conn = family_connection(&spec);
        let xi = [0.1, -0.2, 0.3, 0.05];
        let gphi = conn.eval(&xi).contract_last(&pair.f.eval(&xi));
        assert!(tensor::max_abs_diff(pair.gamma.eval(&xi).as_slice(), gphi.as_slice()) < 1e-12);
        // ∇̃ is diagonal in the ψ-basis: the pair is generalized-analytic.
        let nabla = covariant_derivative(&pair, &xi, &DiffConfig::default()).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                if i != k {
                    assert!(nabla[(i, k)].abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let spec = H4FamilySpec { cross_coupling: 0.3, lambda: LambdaModel::AnalyticReduction, ..generic() };
        let xi = [0.1, -0.2, 0.3, 0.05];
        for c in Convention::ALL {
            let f = family_field(&spec, c);
            let num = fd_jacobian(|x| f.eval(x), &xi, &DiffConfig::central4());
            assert!((f.analytic_jacobian(&xi).unwrap() - num).amax() < 1e-9);
        }
    }

    #[test]
    fn zero_profile_rejected() {
        let spec = H4FamilySpec {
            b: [BProfile::Quadratic(-4.0), BProfile::default(), BProfile::default(), BProfile::default()],
            ..H4FamilySpec::default()
        };
        assert!(matches!(
            family_phi(&spec, Convention::Reciprocal, &[0.5, 0.0, 0.0, 0.0]),
            Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = generic();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<H4FamilySpec>(&text).unwrap(), spec);
        let parsed: H4FamilySpec =
            serde_json::from_str(r#"{"mu": [1, 0, 0, 0], "lambda": {"kind": "analytic-reduction"}}"#).unwrap();
        assert_eq!(parsed.lambda, LambdaModel::AnalyticReduction);
    }
}
