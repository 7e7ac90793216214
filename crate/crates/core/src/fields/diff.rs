//! Central finite differences.

use nalgebra::DMatrix;

use super::{DiffConfig, DiffScheme};

fn step(cfg: &DiffConfig, x: f64) -> f64 {
    cfg.h * x.abs().max(1.0)
}

/// Derivative of `f` along axis `k` at `x`.
fn partial<F>(f: &F, x: &[f64], k: usize, cfg: &DiffConfig) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let h = step(cfg, x[k]);
    let mut p = x.to_vec();
    let mut at = |offset: f64| {
        p[k] = x[k] + offset;
        f(&p)
    };
    match cfg.scheme {
        DiffScheme::Central2 => {
            let fp = at(h);
            let fm = at(-h);
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        }
        DiffScheme::Central4 => {
            let f2p = at(2.0 * h);
            let fp = at(h);
            let fm = at(-h);
            let f2m = at(-2.0 * h);
            (0..fp.len()).map(|i| (-f2p[i] + 8.0 * fp[i] - 8.0 * fm[i] + f2m[i]) / (12.0 * h)).collect()
        }
    }
}

/// `J[(i, k)] ≈ ∂f^i/∂x^k`.
pub fn fd_jacobian<F>(f: F, x: &[f64], cfg: &DiffConfig) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut rows = 0;
    for k in 0..n {
        let d = partial(&f, x, k, cfg);
        rows = d.len();
        cols.push(d);
    }
    DMatrix::from_fn(rows, n, |i, k| cols[k][i])
}

pub fn fd_gradient<F>(f: F, x: &[f64], cfg: &DiffConfig) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let g = |p: &[f64]| vec![f(p)];
    (0..x.len()).map(|k| partial(&g, x, k, cfg)[0]).collect()
}

/// `H[(i, j)] ≈ ∂²f/∂x^i∂x^j` from the four-point mixed stencil
/// (three-point stencil on the diagonal), step `ε^{1/4}·max(1,|x|)`.
pub fn fd_mixed_second<F>(f: F, x: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let base = f64::EPSILON.powf(0.25);
    let hs: Vec<f64> = x.iter().map(|v| base * v.abs().max(1.0)).collect();
    let mut p = x.to_vec();
    let mut eval = |di: (usize, f64), dj: (usize, f64)| {
        p.copy_from_slice(x);
        p[di.0] += di.1;
        p[dj.0] += dj.1;
        f(&p)
    };
    DMatrix::from_fn(n, n, |i, j| {
        let (hi, hj) = (hs[i], hs[j]);
        if i == j {
            let fp = eval((i, hi), (i, 0.0));
            let f0 = eval((i, 0.0), (i, 0.0));
            let fm = eval((i, -hi), (i, 0.0));
            (fp - 2.0 * f0 + fm) / (hi * hi)
        } else {
            let pp = eval((i, hi), (j, hj));
            let pm = eval((i, hi), (j, -hj));
            let mp = eval((i, -hi), (j, hj));
            let mm = eval((i, -hi), (j, -hj));
            (pp - pm - mp + mm) / (4.0 * hi * hj)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(x: &[f64]) -> Vec<f64> {
        vec![x[0].sin() * x[1], (x[0] * x[1]).exp()]
    }

    fn exact(x: &[f64]) -> DMatrix<f64> {
        let e = (x[0] * x[1]).exp();
        DMatrix::from_row_slice(2, 2, &[x[0].cos() * x[1], x[0].sin(), x[1] * e, x[0] * e])
    }

    #[test]
    fn second_and_fourth_order_accuracy() {
        let x = [0.3, -0.7];
        let e2 = (fd_jacobian(field, &x, &DiffConfig::default()) - exact(&x)).amax();
        let e4 = (fd_jacobian(field, &x, &DiffConfig::central4()) - exact(&x)).amax();
        assert!(e2 < 1e-9, "{e2}");
        assert!(e4 < 1e-11, "{e4}");
    }

    #[test]
    fn mixed_second_derivative() {
        let h = fd_mixed_second(|x| x[0] * x[1] + x[0] * x[0] * x[0], &[0.5, 2.0]);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-7);
        assert!((h[(1, 0)] - 1.0).abs() < 1e-7);
        assert!((h[(0, 0)] - 3.0).abs() < 1e-6);
        assert!(h[(1, 1)].abs() < 1e-6);
    }
}
