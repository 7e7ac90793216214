//! Named built-in vector fields, each with an analytic jacobian.

use nalgebra::DMatrix;
use rand::Rng;

use super::VectorField;

pub fn constant_field(c: Vec<f64>) -> VectorField {
    let n = c.len();
    VectorField::new(n, move |_| c.clone()).with_jacobian(move |_| DMatrix::zeros(n, n))
}

/// `f^i = A^i_k x^k + b^i`.
pub fn linear_field(a: DMatrix<f64>, b: Vec<f64>) -> VectorField {
    let n = b.len();
    assert_eq!(a.shape(), (n, n), "linear field matrix must be n × n");
    let a2 = a.clone();
    VectorField::new(n, move |x| (0..n).map(|i| b[i] + (0..n).map(|k| a[(i, k)] * x[k]).sum::<f64>()).collect())
        .with_jacobian(move |_| a2.clone())
}

/// `F(X) = X`.
pub fn identity_field(n: usize) -> VectorField {
    VectorField::new(n, |x| x.to_vec()).with_jacobian(move |_| DMatrix::identity(n, n))
}

/// `f^i = (x^i)^m`.
pub fn componentwise_power(n: usize, m: u32) -> VectorField {
    VectorField::new(n, move |x| x.iter().map(|v| v.powi(m as i32)).collect()).with_jacobian(move |x| {
        DMatrix::from_fn(n, n, |i, k| if i != k || m == 0 { 0.0 } else { m as f64 * x[i].powi(m as i32 - 1) })
    })
}

/// `f^i = exp(c·x^i)`.
pub fn componentwise_exp(n: usize, c: f64) -> VectorField {
    VectorField::new(n, move |x| x.iter().map(|v| (c * v).exp()).collect())
        .with_jacobian(move |x| DMatrix::from_fn(n, n, |i, k| if i == k { c * (c * x[i]).exp() } else { 0.0 }))
}

/// Single nonzero component `f^component = coeff · (x^variable)^exponent` (0-based).
pub fn coordinate_monomial(n: usize, component: usize, variable: usize, exponent: u32, coeff: f64) -> VectorField {
    assert!(component < n && variable < n);
    VectorField::new(n, move |x| {
        let mut v = vec![0.0; n];
        v[component] = coeff * x[variable].powi(exponent as i32);
        v
    })
    .with_jacobian(move |x| {
        let mut j = DMatrix::zeros(n, n);
        if exponent > 0 {
            j[(component, variable)] = coeff * exponent as f64 * x[variable].powi(exponent as i32 - 1);
        }
        j
    })
}

/// Smooth random field `f^i = c_i + A_ik x^k + b_i sin(w_i·x + φ_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomField {
    pub offset: Vec<f64>,
    pub linear: DMatrix<f64>,
    pub amplitude: Vec<f64>,
    pub freq: DMatrix<f64>,
    pub phase: Vec<f64>,
}

impl RandomField {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            offset: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            linear: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)),
            amplitude: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            freq: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.5..1.5)),
            phase: (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
        }
    }

    fn arg(&self, i: usize, x: &[f64]) -> f64 {
        self.phase[i] + (0..x.len()).map(|k| self.freq[(i, k)] * x[k]).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let n = self.offset.len();
        (0..n)
            .map(|i| {
                self.offset[i]
                    + (0..n).map(|k| self.linear[(i, k)] * x[k]).sum::<f64>()
                    + self.amplitude[i] * self.arg(i, x).sin()
            })
            .collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.offset.len();
        DMatrix::from_fn(n, n, |i, k| {
            self.linear[(i, k)] + self.amplitude[i] * self.arg(i, x).cos() * self.freq[(i, k)]
        })
    }

    pub fn field(&self) -> VectorField {
        let a = self.clone();
        let b = self.clone();
        VectorField::new(self.offset.len(), move |x| a.eval(x)).with_jacobian(move |x| b.jacobian(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{fd_jacobian, DiffConfig};
    use rand::SeedableRng;

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let cfg = DiffConfig::central4();
        let x = [0.1, 0.2, 0.3, 0.4];
        let fields = [
            componentwise_power(4, 3),
            componentwise_exp(4, -0.7),
            coordinate_monomial(4, 2, 0, 2, 1.5),
            identity_field(4),
            RandomField::sample(4, &mut rng).field(),
            linear_field(DMatrix::from_fn(4, 4, |i, k| (i * k) as f64), vec![1.0; 4]),
        ];
        for f in fields {
            let fd = fd_jacobian(|p| f.eval(p), &x, &cfg);
            let an = f.analytic_jacobian(&x).unwrap();
            assert!((fd - an).amax() < 1e-10);
        }
    }
}
