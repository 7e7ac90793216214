//! The H4 poly-numbers: the e- and ψ-bases, the quartic Finsler metric
//! `ds = (κ⁴ dξ¹dξ²dξ³dξ⁴)^{1/4}` with its indicatrix, the connection
//! coefficients built from `(κ, λ)`, and the closed-form generalized-analytic
//! family.

mod family;

use nalgebra::DMatrix;

use crate::algebra::{h4_e, h4_psi, BasisChange, StructureConstants};
use crate::error::{Error, Result};
use crate::fields::{ConnectionField, DiffConfig, ScalarField};
use crate::tensor::{self, Tensor3};

pub use family::{
    analytic_reduction, compatibility_residual, default_grid, family_connection, family_field, family_kappa,
    family_pair, family_phi, family_relations, family_residual, BProfile, Convention, FamilyReport, H4FamilySpec,
    LambdaModel, ReductionReport,
};

/// `e_i = s^j_i ψ_j`, so ψ-coordinates are `ξ = s·x`.
pub fn s_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 1.0, 1.0, 1.0, //
            1.0, 1.0, -1.0, -1.0, //
            1.0, -1.0, 1.0, -1.0, //
            1.0, -1.0, -1.0, 1.0,
        ],
    )
}

pub fn e_to_psi() -> BasisChange {
    BasisChange::new(s_matrix(), "h4-e", "h4-psi").expect("s is invertible")
}

pub fn psi_to_e() -> BasisChange {
    e_to_psi().inverse()
}

/// Both H4 tables and the matrix relating them.
#[derive(Clone, Debug)]
pub struct H4Constants {
    pub s: DMatrix<f64>,
    pub psi: StructureConstants,
    pub e: StructureConstants,
}

impl Default for H4Constants {
    fn default() -> Self {
        Self { s: s_matrix(), psi: h4_psi(), e: h4_e() }
    }
}

/// Gaussian κ written in e-coordinates: `κ₀·exp(Σ(x^m)²)`.
pub fn gaussian_kappa_e(kappa0: f64, x: &[f64]) -> f64 {
    kappa0 * x.iter().map(|v| v * v).sum::<f64>().exp()
}

/// `|κ_ψ(s·x) − κ₀ exp(Σ(x^m)²)|` for the Gaussian κ.
pub fn gaussian_kappa_consistency(kappa0: f64, x: &[f64]) -> Result<f64> {
    tensor::check_dim(4, x.len())?;
    let xi = tensor::mat_vec(&s_matrix(), x);
    let metric = FinslerConfig::gaussian(kappa0, 1.0);
    Ok((metric.kappa.value(&xi) - gaussian_kappa_e(kappa0, x)).abs())
}

/// The quartic metric's data: `κ(ξ) > 0`, the gauge `λ(ξ) > 0` and the
/// reference constants.
#[derive(Clone, Debug)]
pub struct FinslerConfig {
    pub kappa: ScalarField,
    pub lam: ScalarField,
    pub kappa0: f64,
    pub lambda0: f64,
    pub sigma0: f64,
    /// Used wherever κ or λ lack an analytic gradient.
    pub diff: DiffConfig,
}

impl FinslerConfig {
    /// `σ₀` defaults to `(κ₀/4)⁴λ₀`, so every logarithm vanishes at the
    /// reference configuration.
    pub fn new(kappa: ScalarField, lam: ScalarField, kappa0: f64, lambda0: f64) -> Self {
        Self { kappa, lam, kappa0, lambda0, sigma0: (kappa0 / 4.0).powi(4) * lambda0, diff: DiffConfig::default() }
    }

    pub fn constant(kappa: f64, lambda: f64) -> Self {
        Self::new(ScalarField::constant(kappa), ScalarField::constant(lambda), kappa, lambda)
    }

    /// `κ = κ₀·exp(Σ(ξ^m)²/4)` with `λ ≡ λ₀`.
    pub fn gaussian(kappa0: f64, lambda0: f64) -> Self {
        let kappa = ScalarField::new(move |x| kappa0 * (x.iter().map(|v| v * v).sum::<f64>() / 4.0).exp())
            .with_gradient(move |x| {
                let k = kappa0 * (x.iter().map(|v| v * v).sum::<f64>() / 4.0).exp();
                x.iter().map(|v| k * v / 2.0).collect()
            });
        Self::new(kappa, ScalarField::constant(lambda0), kappa0, lambda0)
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Self {
        self.sigma0 = sigma0;
        self
    }

    pub fn with_diff(mut self, diff: DiffConfig) -> Self {
        self.diff = diff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("kappa0", self.kappa0), ("lambda0", self.lambda0), ("sigma0", self.sigma0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive { what, value: v });
            }
        }
        self.diff.validate()
    }

    pub fn kappa_at(&self, xi: &[f64]) -> Result<f64> {
        positive("kappa", self.kappa.value(xi))
    }

    pub fn lambda_at(&self, xi: &[f64]) -> Result<f64> {
        positive("lambda", self.lam.value(xi))
    }

    /// `σ = (κ/4)⁴·λ`.
    pub fn sigma(&self, xi: &[f64]) -> Result<f64> {
        Ok((self.kappa_at(xi)? / 4.0).powi(4) * self.lambda_at(xi)?)
    }

    /// `(ln(λ/λ₀), ln(σ/σ₀))`.
    pub fn log_ratios(&self, xi: &[f64]) -> Result<(f64, f64)> {
        Ok(((self.lambda_at(xi)? / self.lambda0).ln(), (self.sigma(xi)? / self.sigma0).ln()))
    }

    /// `(∂ ln λ, ∂ ln σ)` with `ln σ = 4 ln κ + ln λ + const`.
    pub fn log_gradients(&self, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.kappa_at(xi)?;
        let l = self.lambda_at(xi)?;
        let dk = self.kappa.gradient(xi, &self.diff);
        let dl: Vec<f64> = self.lam.gradient(xi, &self.diff).iter().map(|g| g / l).collect();
        let ds = dk.iter().zip(&dl).map(|(g, dl)| 4.0 * g / k + dl).collect();
        Ok((dl, ds))
    }

    /// `∂(κ⁴)/∂ξ^i`.
    pub fn kappa4_gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let k = self.kappa_at(xi)?;
        Ok(self.kappa.gradient(xi, &self.diff).iter().map(|g| 4.0 * k.powi(3) * g).collect())
    }
}

fn positive(what: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonPositive { what, value: v })
    }
}

fn check_cone(v: &[f64], strict: bool) -> Result<()> {
    for (component, &value) in v.iter().enumerate() {
        if value < 0.0 || (strict && value == 0.0) || value.is_nan() {
            return Err(Error::ConeExit { component, value });
        }
    }
    Ok(())
}

/// `ds = (κ⁴ dξ¹dξ²dξ³dξ⁴)^{1/4}` on the cone `dξ^i ≥ 0`.
pub fn finsler_length(dxi: &[f64], xi: &[f64], cfg: &FinslerConfig) -> Result<f64> {
    tensor::check_dim(4, dxi.len())?;
    tensor::check_dim(4, xi.len())?;
    check_cone(dxi, false)?;
    Ok(cfg.kappa_at(xi)? * dxi.iter().product::<f64>().powf(0.25))
}

/// `Φ = p₁p₂p₃p₄ − (κ/4)⁴`.
pub fn indicatrix(p: &[f64], xi: &[f64], cfg: &FinslerConfig) -> Result<f64> {
    tensor::check_dim(4, p.len())?;
    tensor::check_dim(4, xi.len())?;
    check_cone(p, true)?;
    Ok(p.iter().product::<f64>() - (cfg.kappa_at(xi)? / 4.0).powi(4))
}

/// `p_i = ∂(ds)/∂(dξ^i) = ds / (4 dξ^i)`; requires `dξ^i > 0`.
pub fn momenta(dxi: &[f64], xi: &[f64], cfg: &FinslerConfig) -> Result<Vec<f64>> {
    check_cone(dxi, true)?;
    let ds = finsler_length(dxi, xi, cfg)?;
    Ok(dxi.iter().map(|d| ds / (4.0 * d)).collect())
}

/// Which way round the coefficient matrices are read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Row `k = i` of the i-th matrix carries the logarithmic derivatives.
    AsPrinted,
    /// Column `j = i` carries them.
    #[default]
    Transposed,
}

/// `Γ^i_kj` at `ξ`, stored at `(i, k, j)`: minus `∂ ln(λ/λ₀)` in the `i = j = k`
/// slot and minus `∂ ln(σ/σ₀)` in the remaining slots of row (or column) `i`.
pub fn gamma_matrices(xi: &[f64], cfg: &FinslerConfig, orientation: Orientation) -> Result<Tensor3> {
    tensor::check_dim(4, xi.len())?;
    let (dl, ds) = cfg.log_gradients(xi)?;
    let mut g = Tensor3::zeros(4);
    for i in 0..4 {
        for m in 0..4 {
            let v = if m == i { -dl[i] } else { -ds[m] };
            match orientation {
                Orientation::AsPrinted => g[(i, i, m)] = v,
                Orientation::Transposed => g[(i, m, i)] = v,
            }
        }
    }
    Ok(g)
}

/// [`gamma_matrices`] as a field; evaluation failures surface as NaN.
pub fn metric_connection(cfg: &FinslerConfig, orientation: Orientation) -> ConnectionField {
    let cfg = cfg.clone();
    ConnectionField::new(4, move |x| {
        gamma_matrices(x, &cfg, orientation).unwrap_or_else(|_| Tensor3::from_fn(4, |_, _, _| f64::NAN))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{change_basis, multiply, transform_constants};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn s_squares_to_four() {
        let s = s_matrix();
        assert_eq!(&s * &s, DMatrix::identity(4, 4) * 4.0);
        let h = H4Constants::default();
        assert_eq!(transform_constants(&h.e, &e_to_psi()).unwrap().tensor(), h.psi.tensor());
    }

    #[test]
    fn e_products_become_componentwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = H4Constants::default();
        let b = e_to_psi();
        for _ in 0..20 {
            let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let ea = h.e.element(a).unwrap();
            let ec = h.e.element(c).unwrap();
            let lhs = change_basis(&multiply(&ea, &ec, &h.e).unwrap(), &b).unwrap();
            let pa = change_basis(&ea, &b).unwrap();
            let pc = change_basis(&ec, &b).unwrap();
            let want: Vec<f64> = pa.coords().iter().zip(pc.coords()).map(|(x, y)| x * y).collect();
            assert!(tensor::max_abs_diff(lhs.coords(), &want) < 1e-12);
        }
    }

    #[test]
    fn length_examples() {
        let m = FinslerConfig::constant(1.0, 1.0);
        let xi = [0.0; 4];
        assert_eq!(finsler_length(&[1.0; 4], &xi, &m).unwrap(), 1.0);
        assert!((finsler_length(&[16.0, 1.0, 1.0, 1.0], &xi, &m).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(finsler_length(&[1.0, -1.0, 1.0, 1.0], &xi, &m), Err(Error::ConeExit { component: 1, value: -1.0 }));
    }

    #[test]
    fn momenta_lie_on_indicatrix() {
        let m = FinslerConfig::constant(1.0, 1.0);
        let p = momenta(&[1.0; 4], &[0.0; 4], &m).unwrap();
        assert_eq!(p, vec![0.25; 4]);
        assert_eq!(indicatrix(&p, &[0.0; 4], &m).unwrap(), 0.0);
        let m4 = FinslerConfig::constant(4.0, 1.0);
        assert_eq!(indicatrix(&[1.0; 4], &[0.0; 4], &m4).unwrap(), 0.0);

        let g = FinslerConfig::gaussian(4.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let dxi: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..3.0)).collect();
            let xi: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let p = momenta(&dxi, &xi, &g).unwrap();
            let scale = (g.kappa.value(&xi) / 4.0).powi(4);
            assert!(indicatrix(&p, &xi, &g).unwrap().abs() < 1e-12 * scale.max(1.0));
            let scaled: Vec<f64> = dxi.iter().map(|d| 3.5 * d).collect();
            assert!(tensor::max_abs_diff(&momenta(&scaled, &xi, &g).unwrap(), &p) < 1e-14);
        }
    }

    #[test]
    fn constant_metric_has_zero_connection() {
        let m = FinslerConfig::constant(2.0, 3.0);
        for o in [Orientation::AsPrinted, Orientation::Transposed] {
            assert_eq!(gamma_matrices(&[0.1, 0.2, 0.3, 0.4], &m, o).unwrap().max_abs(), 0.0);
        }
        assert_eq!(m.log_ratios(&[0.0; 4]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn gaussian_coefficients() {
        let m = FinslerConfig::gaussian(4.0, 1.0);
        let xi = [0.0, 1.0, 0.0, 0.0];
        let printed = gamma_matrices(&xi, &m, Orientation::AsPrinted).unwrap();
        let transposed = gamma_matrices(&xi, &m, Orientation::Transposed).unwrap();
        assert!((printed[(0, 0, 1)] + 2.0).abs() < 1e-14);
        assert_eq!(transposed, printed.transpose_lower());
        // λ constant: the diagonal slots vanish.
        for i in 0..4 {
            assert_eq!(printed[(i, i, i)], 0.0);
        }
    }

    #[test]
    fn gaussian_in_e_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let err = gaussian_kappa_consistency(1.5, &x).unwrap();
            assert!(err < 1e-12 * gaussian_kappa_e(1.5, &x));
        }
    }

    #[test]
    fn non_positive_kappa_rejected() {
        let m = FinslerConfig::new(ScalarField::constant(-1.0), ScalarField::constant(1.0), 1.0, 1.0);
        assert!(matches!(
            gamma_matrices(&[0.0; 4], &m, Orientation::Transposed),
            Err(Error::NonPositive { what: "kappa", .. })
        ));
    }
}
