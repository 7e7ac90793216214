//! Fixed-step RK4 integration of affine geodesics `ẍ^i = −Γ^i_kj ẋ^k ẋ^j` and
//! of the quartic metric's extremal system in indicatrix form, with the
//! constraint monitored (never projected).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ConnectionField;
use crate::h4::{metric_connection, momenta, FinslerConfig, Orientation};
use crate::tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub x: Vec<f64>,
    /// `dx/dσ`.
    pub v: Vec<f64>,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalState {
    pub xi: Vec<f64>,
    pub p: Vec<f64>,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub steps: usize,
    /// Final parameter value; may lie below the start for backward runs.
    pub t_end: f64,
    pub method: Method,
    /// Relative indicatrix drift allowed at the start and reported against.
    pub drift_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps: 1000, t_end: 1.0, method: Method::Rk4, drift_tol: 1e-6 }
    }
}

impl IntegratorConfig {
    pub fn new(steps: usize, t_end: f64) -> Self {
        Self { steps, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Invalid("steps must be at least 1".into()));
        }
        if !self.t_end.is_finite() {
            return Err(Error::NonFinite("t_end".into()));
        }
        if !(self.drift_tol >= 0.0) {
            return Err(Error::Invalid(format!("drift_tol must be non-negative, got {}", self.drift_tol)));
        }
        Ok(())
    }
}

fn rk4_step<F>(f: &F, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], c: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + c * b).collect() };
    let k1 = f(t, y)?;
    let k2 = f(t + dt / 2.0, &axpy(y, dt / 2.0, &k1))?;
    let k3 = f(t + dt / 2.0, &axpy(y, dt / 2.0, &k2))?;
    let k4 = f(t + dt, &axpy(y, dt, &k3))?;
    Ok((0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

fn finite(y: &[f64], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("state at parameter {t}: {y:?}")))
    }
}

/// `a^i = −Γ^i_kj v^k v^j`.
pub fn geodesic_rhs(gamma: &ConnectionField, s: &GeodesicState) -> Result<Vec<f64>> {
    let n = gamma.dim();
    tensor::check_dim(n, s.x.len())?;
    tensor::check_dim(n, s.v.len())?;
    let g = gamma.eval(&s.x);
    if !g.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::OutOfDomain { point: s.x.clone() });
    }
    let gv = g.contract_last(&s.v);
    Ok((0..n).map(|i| -(0..n).map(|k| gv[(i, k)] * s.v[k]).sum::<f64>()).collect())
}

/// `steps + 1` samples from `s0.sigma` to `cfg.t_end`.
pub fn integrate_geodesic(
    gamma: &ConnectionField,
    s0: &GeodesicState,
    cfg: &IntegratorConfig,
) -> Result<Vec<GeodesicState>> {
    cfg.validate()?;
    let n = gamma.dim();
    tensor::check_dim(n, s0.x.len())?;
    tensor::check_dim(n, s0.v.len())?;
    let rhs = |sigma: f64, y: &[f64]| -> Result<Vec<f64>> {
        let s = GeodesicState { x: y[..n].to_vec(), v: y[n..].to_vec(), sigma };
        let a = geodesic_rhs(gamma, &s)?;
        Ok(s.v.into_iter().chain(a).collect())
    };
    let dt = (cfg.t_end - s0.sigma) / cfg.steps as f64;
    let mut y: Vec<f64> = s0.x.iter().chain(&s0.v).copied().collect();
    finite(&y, s0.sigma)?;
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(s0.clone());
    for step in 1..=cfg.steps {
        let t = s0.sigma + (step - 1) as f64 * dt;
        y = rk4_step(&rhs, t, &y, dt)?;
        let sigma = s0.sigma + step as f64 * dt;
        finite(&y, sigma)?;
        out.push(GeodesicState { x: y[..n].to_vec(), v: y[n..].to_vec(), sigma });
    }
    Ok(out)
}

/// An integrated extremal with the relative constraint residual
/// `Φ/(κ/4)⁴` at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalTrajectory {
    pub states: Vec<ExtremalState>,
    pub drift: Vec<f64>,
}

impl ExtremalTrajectory {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |m: f64, d| m.max(d.abs()))
    }
}

/// `Φ(p; ξ)/(κ/4)⁴`.
pub fn relative_constraint(metric: &FinslerConfig, xi: &[f64], p: &[f64]) -> Result<f64> {
    let scale = (metric.kappa_at(xi)? / 4.0).powi(4);
    Ok((p.iter().product::<f64>() - scale) / scale)
}

/// Extremal state with the momenta of the direction `dxi` at `xi`.
pub fn extremal_from_direction(metric: &FinslerConfig, xi: &[f64], dxi: &[f64]) -> Result<ExtremalState> {
    Ok(ExtremalState { xi: xi.to_vec(), p: momenta(dxi, xi, metric)?, tau: 0.0 })
}

fn cone(p: &[f64]) -> Result<()> {
    match p.iter().position(|v| !(*v > 0.0)) {
        Some(component) => Err(Error::ConeExit { component, value: p[component] }),
        None => Ok(()),
    }
}

/// `ξ̇^i = (p₁p₂p₃p₄/p_i)·λ`, `ṗ_i = ∂_i(κ⁴)·λ/4⁴`, gauge `λ = metric.lam`.
pub fn extremal_rhs(metric: &FinslerConfig, xi: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    cone(p)?;
    let lam = metric.lambda_at(xi)?;
    let prod: f64 = p.iter().product();
    let dk4 = metric.kappa4_gradient(xi)?;
    Ok(p.iter().map(|pi| prod / pi * lam).chain(dk4.iter().map(|g| g * lam / 256.0)).collect())
}

pub fn integrate_extremal(
    metric: &FinslerConfig,
    e0: &ExtremalState,
    cfg: &IntegratorConfig,
) -> Result<ExtremalTrajectory> {
    cfg.validate()?;
    metric.validate()?;
    tensor::check_dim(4, e0.xi.len())?;
    tensor::check_dim(4, e0.p.len())?;
    cone(&e0.p)?;
    let start = relative_constraint(metric, &e0.xi, &e0.p)?;
    if !(start.abs() <= cfg.drift_tol) {
        return Err(Error::ConstraintViolated { residual: start.abs(), tol: cfg.drift_tol });
    }
    let rhs = |_: f64, y: &[f64]| extremal_rhs(metric, &y[..4], &y[4..]);
    let dt = (cfg.t_end - e0.tau) / cfg.steps as f64;
    let mut y: Vec<f64> = e0.xi.iter().chain(&e0.p).copied().collect();
    let mut states = vec![e0.clone()];
    let mut drift = vec![start];
    for step in 1..=cfg.steps {
        let t = e0.tau + (step - 1) as f64 * dt;
        y = rk4_step(&rhs, t, &y, dt)?;
        let tau = e0.tau + step as f64 * dt;
        finite(&y, tau)?;
        cone(&y[4..])?;
        drift.push(relative_constraint(metric, &y[..4], &y[4..])?);
        states.push(ExtremalState { xi: y[..4].to_vec(), p: y[4..].to_vec(), tau });
    }
    Ok(ExtremalTrajectory { states, drift })
}

/// The second-order starting state matching an extremal state: `v^i = ξ̇^i`.
pub fn second_order_start(metric: &FinslerConfig, e: &ExtremalState) -> Result<GeodesicState> {
    let rhs = extremal_rhs(metric, &e.xi, &e.p)?;
    Ok(GeodesicState { x: e.xi.clone(), v: rhs[..4].to_vec(), sigma: e.tau })
}

/// `p_i = σ/v^i` on the constraint surface; NaN outside the cone.
pub fn momenta_from_velocity(metric: &FinslerConfig, xi: &[f64], v: &[f64]) -> Vec<f64> {
    let sigma = metric.sigma(xi).unwrap_or(f64::NAN);
    v.iter().map(|&vi| if vi > 0.0 { sigma / vi } else { f64::NAN }).collect()
}

/// Integrates the same extremal in indicatrix form and in second-order form
/// with the metric connection, both in the gauge `metric.lam`, and returns
/// the largest position discrepancy over the samples.
pub fn cross_check_forms(metric: &FinslerConfig, start: &ExtremalState, cfg: &IntegratorConfig) -> Result<f64> {
    let ham = integrate_extremal(metric, start, cfg)?;
    let conn = metric_connection(metric, Orientation::AsPrinted);
    let geo = integrate_geodesic(&conn, &second_order_start(metric, start)?, cfg)?;
    Ok(ham.states.iter().zip(&geo).map(|(a, b)| tensor::max_abs_diff(&a.xi, &b.x)).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor3;

    fn gaussian() -> FinslerConfig {
        FinslerConfig::gaussian(2.5, 1.0)
    }

    fn start(metric: &FinslerConfig) -> ExtremalState {
        extremal_from_direction(metric, &[0.1, 0.2, 0.15, 0.05], &[1.0, 0.8, 1.2, 0.9]).unwrap()
    }

    #[test]
    fn free_motion_is_straight() {
        let s0 = GeodesicState { x: vec![0.0; 4], v: vec![1.0, 2.0, 3.0, 4.0], sigma: 0.0 };
        let traj = integrate_geodesic(&ConnectionField::zero(4), &s0, &IntegratorConfig::new(100, 1.0)).unwrap();
        assert_eq!(traj.len(), 101);
        for s in &traj {
            let want: Vec<f64> = s0.v.iter().map(|v| v * s.sigma).collect();
            assert!(tensor::max_abs_diff(&s.x, &want) < 1e-12);
        }
    }

    #[test]
    fn rhs_hand_expansion() {
        let conn = metric_connection(&gaussian(), Orientation::AsPrinted);
        let at = |v: [f64; 4]| {
            geodesic_rhs(&conn, &GeodesicState { x: vec![0.0, 1.0, 0.0, 0.0], v: v.to_vec(), sigma: 0.0 }).unwrap()
        };
        // a^i = v^i Σ_{j≠i} 2ξ^j v^j with ξ = (0,1,0,0).
        assert!(tensor::max_abs_diff(&at([1.0, 0.0, 0.0, 0.0]), &[0.0; 4]) < 1e-14);
        assert!(tensor::max_abs_diff(&at([1.0, 1.0, 0.0, 0.0]), &[2.0, 0.0, 0.0, 0.0]) < 1e-14);
        let twice = at([2.0, 2.0, 0.0, 0.0]);
        assert!(tensor::max_abs_diff(&twice, &[8.0, 0.0, 0.0, 0.0]) < 1e-13);
        let transposed = metric_connection(&gaussian(), Orientation::Transposed);
        let s = GeodesicState { x: vec![0.3, -0.1, 0.2, 0.4], v: vec![0.5, 1.0, -0.7, 0.2], sigma: 0.0 };
        assert!(
            tensor::max_abs_diff(&geodesic_rhs(&conn, &s).unwrap(), &geodesic_rhs(&transposed, &s).unwrap()) < 1e-14
        );
    }

    #[test]
    fn non_finite_connection_is_a_domain_error() {
        let bad = ConnectionField::new(2, |_| Tensor3::from_fn(2, |_, _, _| f64::NAN));
        let s = GeodesicState { x: vec![0.0; 2], v: vec![1.0; 2], sigma: 0.0 };
        assert!(matches!(geodesic_rhs(&bad, &s), Err(Error::OutOfDomain { .. })));
        assert!(integrate_geodesic(&bad, &s, &IntegratorConfig::new(3, 1.0)).is_err());
    }

    #[test]
    fn rk4_order() {
        let m = gaussian();
        let conn = metric_connection(&m, Orientation::Transposed);
        let s0 = second_order_start(&m, &start(&m)).unwrap();
        let end = |steps| integrate_geodesic(&conn, &s0, &IntegratorConfig::new(steps, 0.5)).unwrap().pop().unwrap().x;
        let reference = end(400);
        let e1 = tensor::max_abs_diff(&end(20), &reference);
        let e2 = tensor::max_abs_diff(&end(40), &reference);
        let order = (e1 / e2).log2();
        assert!((3.7..4.3).contains(&order), "order {order}");
    }

    #[test]
    fn reversible() {
        let m = gaussian();
        let conn = metric_connection(&m, Orientation::Transposed);
        let s0 = second_order_start(&m, &start(&m)).unwrap();
        let cfg = IntegratorConfig::new(1000, 0.5);
        let fwd = integrate_geodesic(&conn, &s0, &cfg).unwrap().pop().unwrap();
        let back = integrate_geodesic(&conn, &fwd, &IntegratorConfig::new(1000, 0.0)).unwrap().pop().unwrap();
        assert!(tensor::max_abs_diff(&back.x, &s0.x) < 1e-8);
        assert!(tensor::max_abs_diff(&back.v, &s0.v) < 1e-8);
    }

    #[test]
    fn constant_metric_extremals() {
        let m = FinslerConfig::constant(4.0, 1.0);
        let e0 = extremal_from_direction(&m, &[0.0; 4], &[1.0, 2.0, 0.5, 1.0]).unwrap();
        let t = integrate_extremal(&m, &e0, &IntegratorConfig::new(10, 1.0)).unwrap();
        let v = &second_order_start(&m, &e0).unwrap().v;
        for s in &t.states {
            assert_eq!(s.p, e0.p);
            let want: Vec<f64> = v.iter().map(|v| v * s.tau).collect();
            assert!(tensor::max_abs_diff(&s.xi, &want) < 1e-13);
        }
        assert!(cross_check_forms(&m, &e0, &IntegratorConfig::new(10, 1.0)).unwrap() < 1e-12);
    }

    #[test]
    fn gaussian_constraint_and_cross_check() {
        let m = gaussian();
        let e0 = start(&m);
        let cfg = IntegratorConfig::new(10_000, 1.0);
        let t = integrate_extremal(&m, &e0, &cfg).unwrap();
        assert_eq!(t.states.len(), 10_001);
        assert!(t.max_drift() < 1e-6, "drift {}", t.max_drift());
        let d = cross_check_forms(&m, &e0, &cfg).unwrap();
        assert!(d < 1e-5, "discrepancy {d}");
        let coarse = cross_check_forms(&m, &e0, &IntegratorConfig::new(50, 1.0)).unwrap();
        let fine = cross_check_forms(&m, &e0, &IntegratorConfig::new(100, 1.0)).unwrap();
        assert!(coarse / fine > 8.0, "{coarse} vs {fine}");
    }

    #[test]
    fn start_errors() {
        let m = gaussian();
        let mut e0 = start(&m);
        e0.p[0] *= 1.01;
        assert!(matches!(
            integrate_extremal(&m, &e0, &IntegratorConfig::default()),
            Err(Error::ConstraintViolated { .. })
        ));
        e0.p[0] = -1.0;
        assert!(matches!(
            integrate_extremal(&m, &e0, &IntegratorConfig::default()),
            Err(Error::ConeExit { component: 0, .. })
        ));
        assert!(IntegratorConfig::new(0, 1.0).validate().is_err());
    }

    #[test]
    fn momenta_recovered_from_velocity() {
        let m = gaussian();
        let e0 = start(&m);
        let g = second_order_start(&m, &e0).unwrap();
        let p = momenta_from_velocity(&m, &g.x, &g.v);
        assert!(tensor::max_abs_diff(&p, &e0.p) < 1e-14);
    }
}
