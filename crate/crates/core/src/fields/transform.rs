//! Coordinate changes of pairs: `f` is contravariant and `γ` picks up a
//! second-derivative term, so that `∇̃_k f^i` transforms as a tensor.

use nalgebra::DMatrix;
use rand::Rng;

use super::calculus::covariant_derivative;
use super::{check_finite, fd_jacobian, DiffConfig, GAPair};
use crate::error::{Error, Result};
use crate::tensor::{self, Tensor3};

/// Smooth invertible map `x ↦ x'` with analytic first and second derivatives.
pub trait Diffeo: Send + Sync {
    fn dim(&self) -> usize;
    fn map(&self, x: &[f64]) -> Vec<f64>;
    /// `A[(i', i)] = ∂x'^{i'}/∂x^i`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
    /// `H[(i', k, i)] = ∂²x'^{i'}/∂x^k∂x^i`.
    fn hessian(&self, x: &[f64]) -> Tensor3;
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityMap(pub usize);

impl Diffeo for IdentityMap {
    fn dim(&self) -> usize {
        self.0
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn jacobian(&self, _: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.0, self.0)
    }

    fn hessian(&self, _: &[f64]) -> Tensor3 {
        Tensor3::zeros(self.0)
    }
}

#[derive(Clone, Debug)]
pub struct LinearMap(pub DMatrix<f64>);

impl Diffeo for LinearMap {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        tensor::mat_vec(&self.0, x)
    }

    fn jacobian(&self, _: &[f64]) -> DMatrix<f64> {
        self.0.clone()
    }

    fn hessian(&self, _: &[f64]) -> Tensor3 {
        Tensor3::zeros(self.dim())
    }
}

/// `x'^i = x^i + ε sin(x^{(i+1) mod n})`.
#[derive(Clone, Copy, Debug)]
pub struct SineShear {
    pub n: usize,
    pub eps: f64,
}

impl Diffeo for SineShear {
    fn dim(&self) -> usize {
        self.n
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| x[i] + self.eps * x[(i + 1) % self.n].sin()).collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut a = DMatrix::identity(self.n, self.n);
        for i in 0..self.n {
            let j = (i + 1) % self.n;
            a[(i, j)] += self.eps * x[j].cos();
        }
        a
    }

    fn hessian(&self, x: &[f64]) -> Tensor3 {
        let mut h = Tensor3::zeros(self.n);
        for i in 0..self.n {
            let j = (i + 1) % self.n;
            h[(i, j, j)] = -self.eps * x[j].sin();
        }
        h
    }
}

/// `x'^i = M_ij x^j + Σ_j c_ij sin(w_ij x^j + φ_ij)` with `M` near identity.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothRandomMap {
    pub linear: DMatrix<f64>,
    pub amp: DMatrix<f64>,
    pub freq: DMatrix<f64>,
    pub phase: DMatrix<f64>,
}

impl SmoothRandomMap {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            linear: DMatrix::from_fn(n, n, |i, j| (if i == j { 1.0 } else { 0.0 }) + rng.gen_range(-0.2..0.2)),
            amp: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.2..0.2)),
            freq: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)),
            phase: DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..std::f64::consts::TAU)),
        }
    }

    fn arg(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        self.freq[(i, j)] * x[j] + self.phase[(i, j)]
    }
}

impl Diffeo for SmoothRandomMap {
    fn dim(&self) -> usize {
        self.linear.nrows()
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.linear[(i, j)] * x[j] + self.amp[(i, j)] * self.arg(i, j, x).sin()).sum())
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            self.linear[(i, j)] + self.amp[(i, j)] * self.freq[(i, j)] * self.arg(i, j, x).cos()
        })
    }

    fn hessian(&self, x: &[f64]) -> Tensor3 {
        let n = self.dim();
        let mut h = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let w = self.freq[(i, j)];
                h[(i, j, j)] = -self.amp[(i, j)] * w * w * self.arg(i, j, x).sin();
            }
        }
        h
    }
}

/// Objects of a pair at one point, expressed in the new coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Transformed {
    pub point: Vec<f64>,
    pub f: Vec<f64>,
    pub gamma: DMatrix<f64>,
    /// `∂f'/∂x' + γ'`, with `∂f'/∂x'` differenced numerically.
    pub nabla: DMatrix<f64>,
    /// `A ∇̃f A⁻¹`: the tensor transport of the original covariant derivative.
    pub transported: DMatrix<f64>,
}

pub fn gamma_transform(pair: &GAPair, map: &dyn Diffeo, x: &[f64], cfg: &DiffConfig) -> Result<Transformed> {
    let n = pair.dim();
    tensor::check_dim(n, map.dim())?;
    let a = map.jacobian(x);
    let scale = tensor::max_abs(&a).max(1.0).powi(n as i32);
    if a.determinant().abs() <= 1e-12 * scale {
        return Err(Error::SingularMatrix("diffeomorphism jacobian"));
    }
    let a_inv = tensor::inverse(&a, "diffeomorphism jacobian")?;
    let h = map.hessian(x);
    let f = pair.f.eval(x);
    let gamma = pair.gamma.eval(x);

    let f_new = tensor::mat_vec(&a, &f);
    // γ'^{i'}_{k'} = (A⁻¹)^k_{k'} [A^{i'}_i γ^i_k − H^{i'}_{ki} f^i]
    let inner = DMatrix::from_fn(n, n, |ip, k| {
        let rot: f64 = (0..n).map(|i| a[(ip, i)] * gamma[(i, k)]).sum();
        let hess: f64 = (0..n).map(|i| h[(ip, k, i)] * f[i]).sum();
        rot - hess
    });
    let gamma_new = &inner * &a_inv;

    let g = fd_jacobian(|y| tensor::mat_vec(&map.jacobian(y), &pair.f.eval(y)), x, cfg);
    let nabla_new = &g * &a_inv + &gamma_new;
    let transported = &a * covariant_derivative(pair, x, cfg)? * &a_inv;
    check_finite(nabla_new.as_slice(), "transformed covariant derivative")?;
    Ok(Transformed { point: map.map(x), f: f_new, gamma: gamma_new, nabla: nabla_new, transported })
}
