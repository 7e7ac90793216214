//! Linear combinations, products, quotients and compositions of pairs.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::calculus::{derivative, DerivativeForm};
use super::{check_finite, DiffConfig, GAPair, GammaField, PointFn, VectorField};
use crate::algebra::{invert_raw, StructureConstants};
use crate::error::{Error, Result};

fn column(m: &DMatrix<f64>, k: usize) -> Vec<f64> {
    m.column(k).iter().copied().collect()
}

/// Applies `g` to each column `k` (a poly-number indexed by `i`).
fn map_columns(m: &DMatrix<f64>, mut g: impl FnMut(usize, &[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let cols: Vec<Vec<f64>> = (0..n).map(|k| g(k, &column(m, k))).collect();
    DMatrix::from_fn(m.nrows(), n, |i, k| cols[k][i])
}

/// `{αf₁ + βf₂, αγ₁ + βγ₂}`.
pub fn pair_combine(alpha: f64, p1: &GAPair, beta: f64, p2: &GAPair) -> Result<GAPair> {
    p1.same_algebra(p2)?;
    let n = p1.dim();
    let (f1, f2) = (p1.f.eval_fn(), p2.f.eval_fn());
    let mut f = VectorField::new(n, move |x| f1(x).iter().zip(f2(x)).map(|(a, b)| alpha * a + beta * b).collect());
    if let (Some(j1), Some(j2)) = (p1.f.jacobian_fn(), p2.f.jacobian_fn()) {
        f = f.with_jacobian(move |x| j1(x) * alpha + j2(x) * beta);
    }
    let (g1, g2) = (p1.gamma.eval_fn(), p2.gamma.eval_fn());
    let gamma = GammaField::new(n, move |x| g1(x) * alpha + g2(x) * beta);
    let f = f.with_domain(p1.f.domain().intersect(p2.f.domain()));
    GAPair::new(f, gamma, p1.algebra.clone())
}

/// Product rule for `{F₁F₂, γ₃}` with `γ₃ = p(γ₁F₂ + F₁γ₂)`.
///
/// Valid in coordinates where the structure constants are parallel
/// (vanishing connection on `p^k_ij`).
pub fn pair_product(p1: &GAPair, p2: &GAPair) -> Result<GAPair> {
    p1.same_algebra(p2)?;
    let s = p1.algebra.clone();
    let n = s.n();
    let (f1, f2) = (p1.f.eval_fn(), p2.f.eval_fn());
    let sf = s.clone();
    let mut f = VectorField::new(n, move |x| sf.mul(&f1(x), &f2(x)));
    if let (Some(j1), Some(j2)) = (p1.f.jacobian_fn(), p2.f.jacobian_fn()) {
        let (f1, f2) = (p1.f.eval_fn(), p2.f.eval_fn());
        let sj = s.clone();
        f = f.with_jacobian(move |x| leibniz(&sj, &f1(x), &j1(x), &f2(x), &j2(x)));
    }
    let (f1, f2) = (p1.f.eval_fn(), p2.f.eval_fn());
    let (g1, g2) = (p1.gamma.eval_fn(), p2.gamma.eval_fn());
    let sg = s.clone();
    let gamma = GammaField::new(n, move |x| leibniz(&sg, &f1(x), &g1(x), &f2(x), &g2(x)));
    let f = f.with_domain(p1.f.domain().intersect(p2.f.domain()));
    GAPair::new(f, gamma, s)
}

/// Column-wise `a·D_b + D_a·b`.
fn leibniz(s: &StructureConstants, a: &[f64], da: &DMatrix<f64>, b: &[f64], db: &DMatrix<f64>) -> DMatrix<f64> {
    let dbs = db.clone();
    map_columns(da, |k, col| {
        let left = s.mul(col, b);
        let right = s.mul(a, &column(&dbs, k));
        left.iter().zip(right).map(|(l, r)| l + r).collect()
    })
}

/// The constant unit pair `{1, 0}`.
pub fn unit_pair(s: Arc<StructureConstants>) -> Result<GAPair> {
    let u = s.unit_or_err()?.to_vec();
    GAPair::analytic(super::constant_field(u), s)
}

/// The analytic pair `{X, 0}`.
pub fn identity_pair(s: Arc<StructureConstants>) -> Result<GAPair> {
    GAPair::analytic(super::identity_field(s.n()), s)
}

/// Value and derivative of `F₂/F₁` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientValue {
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
}

/// `F = F₂/F₁` and `F' = (F₁F₂' − F₁'F₂)/F₁²` at `x`.
pub fn pair_quotient(p2: &GAPair, p1: &GAPair, x: &[f64], cfg: &DiffConfig) -> Result<QuotientValue> {
    p1.same_algebra(p2)?;
    let s = &p1.algebra;
    let f1 = p1.f.eval(x);
    let f2 = p2.f.eval(x);
    let inv = invert_raw(&f1, s)?;
    let form = DerivativeForm::natural(s)?;
    let d1 = derivative(p1, x, cfg, form)?;
    let d2 = derivative(p2, x, cfg, form)?;
    let num: Vec<f64> = s.mul(&f1, &d2).iter().zip(s.mul(&d1, &f2)).map(|(a, b)| a - b).collect();
    let inv_sq = s.mul(&inv, &inv);
    Ok(QuotientValue { value: s.mul(&f2, &inv), derivative: s.mul(&num, &inv_sq) })
}

/// The quotient as a pair: `F = F₂F₁⁻¹`, `γ_k = F₁⁻¹(γ₂_k − F·γ₁_k)`.
///
/// Points where `F₁` is a zero divisor evaluate to NaN, which the residual
/// routines reject.
pub fn quotient_pair(p2: &GAPair, p1: &GAPair) -> Result<GAPair> {
    p1.same_algebra(p2)?;
    let s = p1.algebra.clone();
    let n = s.n();
    let nan = move || vec![f64::NAN; n];

    let (f1, f2) = (p1.f.eval_fn(), p2.f.eval_fn());
    let sf = s.clone();
    let value: PointFn<Vec<f64>> = Arc::new(move |x: &[f64]| match invert_raw(&f1(x), &sf) {
        Ok(inv) => sf.mul(&f2(x), &inv),
        Err(_) => nan(),
    });

    let corrected = |d1: PointFn<DMatrix<f64>>, d2: PointFn<DMatrix<f64>>| {
        let f1 = p1.f.eval_fn();
        let value = value.clone();
        let s = s.clone();
        move |x: &[f64]| -> DMatrix<f64> {
            let Ok(inv) = invert_raw(&f1(x), &s) else {
                return DMatrix::from_element(n, n, f64::NAN);
            };
            let q = value(x);
            let d1 = d1(x);
            map_columns(&d2(x), |k, col| {
                let t = s.mul(&q, &column(&d1, k));
                let diff: Vec<f64> = col.iter().zip(t).map(|(a, b)| a - b).collect();
                s.mul(&inv, &diff)
            })
        }
    };

    let v = value.clone();
    let mut f = VectorField::new(n, move |x| v(x));
    if let (Some(j1), Some(j2)) = (p1.f.jacobian_fn(), p2.f.jacobian_fn()) {
        f = f.with_jacobian(corrected(j1, j2));
    }
    let gamma = GammaField::new(n, corrected(p1.gamma.eval_fn(), p2.gamma.eval_fn()));
    let f = f.with_domain(p1.f.domain().intersect(p2.f.domain()));
    GAPair::new(f, gamma, s)
}

/// An analytic function of a poly-number variable with its derivative.
pub trait PolyFunction: Send + Sync {
    fn eval(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>>;
    fn derivative(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityFn;

impl PolyFunction for IdentityFn {
    fn eval(&self, x: &[f64], _: &StructureConstants) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }

    fn derivative(&self, _: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        Ok(s.unit_or_err()?.to_vec())
    }
}

fn power(x: &[f64], m: u32, s: &StructureConstants) -> Result<Vec<f64>> {
    let mut acc = s.unit_or_err()?.to_vec();
    for _ in 0..m {
        acc = s.mul(&acc, x);
    }
    Ok(acc)
}

/// `X^m`.
#[derive(Clone, Copy, Debug)]
pub struct PowerFn(pub u32);

impl PolyFunction for PowerFn {
    fn eval(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        power(x, self.0, s)
    }

    fn derivative(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        if self.0 == 0 {
            return Ok(vec![0.0; s.n()]);
        }
        Ok(power(x, self.0 - 1, s)?.iter().map(|v| self.0 as f64 * v).collect())
    }
}

/// Exponential truncated after `terms` terms of its series.
#[derive(Clone, Copy, Debug)]
pub struct ExpFn {
    pub terms: usize,
}

impl Default for ExpFn {
    fn default() -> Self {
        Self { terms: 30 }
    }
}

fn exp_partial(x: &[f64], terms: usize, s: &StructureConstants) -> Result<Vec<f64>> {
    let mut term = s.unit_or_err()?.to_vec();
    let mut acc = vec![0.0; s.n()];
    for m in 0..terms {
        if m > 0 {
            term = s.mul(&term, x).iter().map(|v| v / m as f64).collect();
        }
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
    }
    Ok(acc)
}

impl PolyFunction for ExpFn {
    fn eval(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        exp_partial(x, self.terms, s)
    }

    fn derivative(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        exp_partial(x, self.terms.saturating_sub(1), s)
    }
}

/// `Σ c_m X^m` with poly-number coefficients given as raw coordinates.
#[derive(Clone, Debug)]
pub struct PolynomialFn(pub Vec<Vec<f64>>);

impl PolynomialFn {
    fn horner(coeffs: &[Vec<f64>], x: &[f64], s: &StructureConstants) -> Vec<f64> {
        let Some((last, rest)) = coeffs.split_last() else {
            return vec![0.0; s.n()];
        };
        let mut acc = last.clone();
        for c in rest.iter().rev() {
            acc = s.mul(&acc, x);
            for (a, ci) in acc.iter_mut().zip(c) {
                *a += ci;
            }
        }
        acc
    }
}

impl PolyFunction for PolynomialFn {
    fn eval(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        Ok(Self::horner(&self.0, x, s))
    }

    fn derivative(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        let d: Vec<Vec<f64>> =
            self.0.iter().enumerate().skip(1).map(|(m, c)| c.iter().map(|v| m as f64 * v).collect()).collect();
        Ok(Self::horner(&d, x, s))
    }
}

/// `X⁻¹`, undefined on zero divisors.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReciprocalFn;

impl PolyFunction for ReciprocalFn {
    fn eval(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        invert_raw(x, s)
    }

    fn derivative(&self, x: &[f64], s: &StructureConstants) -> Result<Vec<f64>> {
        let inv = invert_raw(x, s)?;
        Ok(s.mul(&inv, &inv).iter().map(|v| -v).collect())
    }
}

fn outer_at<T>(r: Result<T>, x: &[f64]) -> Result<T> {
    r.map_err(|e| match e {
        Error::NoUnit => Error::NoUnit,
        _ => Error::OutOfDomain { point: x.to_vec() },
    })
}

/// Chain rule `F' = F₂'(F₁)·F₁'` at `x`.
pub fn pair_compose(outer: &dyn PolyFunction, inner: &GAPair, x: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>> {
    let s = &inner.algebra;
    let y = inner.f.eval(x);
    check_finite(&y, "inner field")?;
    let dout = outer_at(outer.derivative(&y, s), &y)?;
    let din = derivative(inner, x, cfg, DerivativeForm::natural(s)?)?;
    Ok(s.mul(&dout, &din))
}

/// `{F₂(F₁), F₂'(F₁)·γ₁}`; NaN where `F₁(x)` leaves the outer function's domain.
pub fn compose_pair(outer: Arc<dyn PolyFunction>, inner: &GAPair) -> Result<GAPair> {
    let s = inner.algebra.clone();
    let n = s.n();
    let nan_mat = move || DMatrix::from_element(n, n, f64::NAN);

    let f1 = inner.f.eval_fn();
    let (o, sv) = (outer.clone(), s.clone());
    let mut f = VectorField::new(n, move |x| o.eval(&f1(x), &sv).unwrap_or_else(|_| vec![f64::NAN; n]));

    let chain = |d: PointFn<DMatrix<f64>>| {
        let f1 = inner.f.eval_fn();
        let (o, s) = (outer.clone(), s.clone());
        move |x: &[f64]| -> DMatrix<f64> {
            let Ok(dout) = o.derivative(&f1(x), &s) else {
                return nan_mat();
            };
            map_columns(&d(x), |_, col| s.mul(&dout, col))
        }
    };
    if let Some(j1) = inner.f.jacobian_fn() {
        f = f.with_jacobian(chain(j1));
    }
    let gamma = GammaField::new(n, chain(inner.gamma.eval_fn()));
    GAPair::new(f.with_domain(inner.f.domain().clone()), gamma, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{h4_e, h4_psi};
    use crate::fields::{cr_residual, gamma_from_prescribed, RandomField};
    use crate::tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn psi() -> Arc<StructureConstants> {
        Arc::new(h4_psi())
    }

    fn random_pair(s: Arc<StructureConstants>, seed: u64) -> GAPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = s.n();
        let f = RandomField::sample(n, &mut rng).field();
        let fp = RandomField::sample(n, &mut rng).field();
        gamma_from_prescribed(&f, &fp, s).unwrap()
    }

    const X: [f64; 4] = [0.1, -0.25, 0.3, 0.2];

    #[test]
    fn combine_identities() {
        let s = Arc::new(h4_e());
        let p1 = random_pair(s.clone(), 1);
        let p2 = random_pair(s, 2);
        let same = pair_combine(1.0, &p1, 0.0, &p2).unwrap();
        assert_eq!(same.f.eval(&X), p1.f.eval(&X));
        assert_eq!(same.gamma.eval(&X), p1.gamma.eval(&X));

        let zero = pair_combine(2.0, &p1, -2.0, &p1).unwrap();
        assert_eq!(zero.f.eval(&X), vec![0.0; 4]);
        assert_eq!(cr_residual(&zero, &X, &DiffConfig::default()).unwrap().amax(), 0.0);

        let sum = pair_combine(1.0, &p1, 1.0, &p2).unwrap();
        assert!(cr_residual(&sum, &X, &DiffConfig::default().fd_only()).unwrap().amax() < 1e-8);
    }

    #[test]
    fn combine_rejects_foreign_algebra() {
        let p1 = random_pair(Arc::new(h4_e()), 1);
        let p2 = random_pair(psi(), 2);
        assert!(matches!(pair_combine(1.0, &p1, 1.0, &p2), Err(Error::AlgebraMismatch)));
        assert!(matches!(pair_product(&p1, &p2), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn square_of_identity() {
        let x = identity_pair(psi()).unwrap();
        let sq = pair_product(&x, &x).unwrap();
        let pt = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(sq.f.eval(&pt), vec![1.0, 4.0, 9.0, 16.0]);
        let cfg = DiffConfig::default().fd_only();
        let d = derivative(&sq, &pt, &cfg, DerivativeForm::Invariant).unwrap();
        assert!(tensor::max_abs_diff(&d, &[2.0, 4.0, 6.0, 8.0]) < 1e-8);
    }

    #[test]
    fn unit_is_neutral_for_product() {
        for s in [Arc::new(h4_e()), psi()] {
            let p = random_pair(s.clone(), 5);
            let prod = pair_product(&p, &unit_pair(s).unwrap()).unwrap();
            assert!(tensor::max_abs_diff(&prod.f.eval(&X), &p.f.eval(&X)) < 1e-15);
            assert!((prod.gamma.eval(&X) - p.gamma.eval(&X)).amax() < 1e-15);
        }
    }

    #[test]
    fn product_rule() {
        let s = Arc::new(h4_e());
        let (p1, p2) = (random_pair(s.clone(), 8), random_pair(s.clone(), 9));
        let prod = pair_product(&p1, &p2).unwrap();
        let cfg = DiffConfig::default().fd_only();
        assert!(cr_residual(&prod, &X, &cfg).unwrap().amax() < 1e-7);
        let form = DerivativeForm::UnitDirection;
        let d = derivative(&prod, &X, &cfg, form).unwrap();
        let d1 = derivative(&p1, &X, &cfg, form).unwrap();
        let d2 = derivative(&p2, &X, &cfg, form).unwrap();
        let rule: Vec<f64> =
            s.mul(&d1, &p2.f.eval(&X)).iter().zip(s.mul(&p1.f.eval(&X), &d2)).map(|(a, b)| a + b).collect();
        assert!(tensor::max_abs_diff(&d, &rule) < 1e-7);
    }

    #[test]
    fn quotient_examples() {
        let cfg = DiffConfig::default().fd_only();
        let p = random_pair(Arc::new(h4_e()), 4);
        let q = pair_quotient(&p, &p, &X, &cfg).unwrap();
        assert!(tensor::max_abs_diff(&q.value, &[1.0, 0.0, 0.0, 0.0]) < 1e-10);
        assert!(tensor::max_abs_vec(&q.derivative) < 1e-10);

        let x = identity_pair(psi()).unwrap();
        let x2 = pair_product(&x, &x).unwrap();
        let pt = [1.0, 2.0, 3.0, 4.0];
        let q = pair_quotient(&x2, &x, &pt, &cfg).unwrap();
        assert!(tensor::max_abs_diff(&q.value, &pt) < 1e-12);
        assert!(tensor::max_abs_diff(&q.derivative, &[1.0; 4]) < 1e-8);

        let err = pair_quotient(&x2, &x, &[1.0, 0.0, 3.0, 4.0], &cfg);
        assert!(matches!(err, Err(Error::ZeroDivisor { .. })));
    }

    #[test]
    fn quotient_pair_is_generalized_analytic() {
        let s = Arc::new(h4_e());
        // Shift the denominator well away from the zero divisors.
        let p1 = pair_combine(1.0, &random_pair(s.clone(), 21), 3.0, &unit_pair(s.clone()).unwrap()).unwrap();
        let p2 = random_pair(s, 22);
        let q = quotient_pair(&p2, &p1).unwrap();
        let cfg = DiffConfig::default().fd_only();
        assert!(cr_residual(&q, &X, &cfg).unwrap().amax() < 1e-7);
        let direct = pair_quotient(&p2, &p1, &X, &cfg).unwrap();
        let d = derivative(&q, &X, &cfg, DerivativeForm::UnitDirection).unwrap();
        assert!(tensor::max_abs_diff(&d, &direct.derivative) < 1e-6);
    }

    #[test]
    fn compose_examples() {
        let cfg = DiffConfig::default();
        let s = Arc::new(h4_e());
        let inner = random_pair(s.clone(), 30);
        let d_inner = derivative(&inner, &X, &cfg, DerivativeForm::UnitDirection).unwrap();
        let d = pair_compose(&IdentityFn, &inner, &X, &cfg).unwrap();
        assert!(tensor::max_abs_diff(&d, &d_inner) < 1e-15);

        let x = identity_pair(psi()).unwrap();
        let pt = [1.0, 2.0, 3.0, 4.0];
        let d = pair_compose(&PowerFn(2), &x, &pt, &cfg).unwrap();
        assert_eq!(d, vec![2.0, 4.0, 6.0, 8.0]);

        let comp = compose_pair(Arc::new(ExpFn::default()), &inner).unwrap();
        let chain = pair_compose(&ExpFn::default(), &inner, &X, &cfg).unwrap();
        let fd = derivative(&comp, &X, &cfg.fd_only(), DerivativeForm::UnitDirection).unwrap();
        assert!(tensor::max_abs_diff(&chain, &fd) < 1e-6);
        assert!(cr_residual(&comp, &X, &cfg.fd_only()).unwrap().amax() < 1e-7);
    }

    #[test]
    fn compose_outside_outer_domain() {
        let cfg = DiffConfig::default();
        let x = identity_pair(psi()).unwrap();
        let err = pair_compose(&ReciprocalFn, &x, &[1.0, 0.0, 2.0, 3.0], &cfg);
        assert!(matches!(err, Err(Error::OutOfDomain { .. })));
        let ok = pair_compose(&ReciprocalFn, &x, &[1.0, 2.0, 4.0, 0.5], &cfg).unwrap();
        assert!(tensor::max_abs_diff(&ok, &[-1.0, -0.25, -0.0625, -4.0]) < 1e-12);
    }

    #[test]
    fn polynomial_matches_power() {
        let s = h4_e();
        let x = [0.3, 0.1, -0.2, 0.4];
        let p = PolynomialFn(vec![vec![0.0; 4], vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]]);
        assert!(tensor::max_abs_diff(&p.eval(&x, &s).unwrap(), &PowerFn(2).eval(&x, &s).unwrap()) < 1e-15);
        assert!(tensor::max_abs_diff(&p.derivative(&x, &s).unwrap(), &PowerFn(2).derivative(&x, &s).unwrap()) < 1e-15);
    }
}
