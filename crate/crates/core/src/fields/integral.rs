//! Line integrals `∫ F dX` with the product taken in the algebra.

use std::fmt;
use std::sync::Arc;

use super::{check_finite, DiffConfig, VectorField};
use crate::algebra::{PolyNumber, StructureConstants};
use crate::error::{Error, Result};
use crate::tensor;

type CurveFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
struct Piece {
    point: CurveFn,
    velocity: CurveFn,
}

/// Piecewise-smooth curve; every piece is parametrized over `t ∈ [0, 1]`.
#[derive(Clone)]
pub struct Path {
    n: usize,
    pieces: Vec<Piece>,
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Path").field("n", &self.n).field("pieces", &self.pieces.len()).finish()
    }
}

impl Path {
    pub fn straight(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::polyline(vec![a, b])
    }

    pub fn polyline(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("a polyline needs at least two points".into()));
        }
        let n = points[0].len();
        for p in &points {
            tensor::check_dim(n, p.len())?;
        }
        let pieces = points
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].clone(), w[1].clone());
                let d: Vec<f64> = a.iter().zip(&b).map(|(a, b)| b - a).collect();
                let dv = d.clone();
                Piece {
                    point: Arc::new(move |t| a.iter().zip(&d).map(|(a, d)| a + t * d).collect()),
                    velocity: Arc::new(move |_| dv.clone()),
                }
            })
            .collect();
        Ok(Self { n, pieces })
    }

    /// Move from `start` to `end` one axis at a time, in `order`.
    pub fn axis_polyline(start: Vec<f64>, end: &[f64], order: &[usize]) -> Result<Self> {
        tensor::check_dim(start.len(), end.len())?;
        let mut points = vec![start.clone()];
        let mut cur = start;
        for &k in order {
            if k >= cur.len() {
                return Err(Error::Invalid(format!("axis {k} out of range")));
            }
            cur[k] = end[k];
            points.push(cur.clone());
        }
        if tensor::max_abs_diff(&cur, end) != 0.0 {
            return Err(Error::Invalid("axis order does not reach the end point".into()));
        }
        Self::polyline(points)
    }

    /// Closed rectangle in the `(i, j)` plane with sides `di`, `dj`.
    pub fn rectangle_loop(corner: Vec<f64>, i: usize, j: usize, di: f64, dj: f64) -> Result<Self> {
        let n = corner.len();
        if i >= n || j >= n || i == j {
            return Err(Error::Invalid(format!("bad rectangle axes ({i}, {j})")));
        }
        let mut pts = vec![corner.clone()];
        let mut c = corner.clone();
        c[i] += di;
        pts.push(c.clone());
        c[j] += dj;
        pts.push(c.clone());
        c[i] -= di;
        pts.push(c);
        pts.push(corner);
        Self::polyline(pts)
    }

    pub fn custom(
        n: usize,
        point: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        velocity: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { n, pieces: vec![Piece { point: Arc::new(point), velocity: Arc::new(velocity) }] }
    }

    /// Append another path; its start should coincide with this path's end.
    pub fn then(mut self, other: Path) -> Result<Self> {
        tensor::check_dim(self.n, other.n)?;
        self.pieces.extend(other.pieces);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> Vec<f64> {
        (self.pieces[0].point)(0.0)
    }

    pub fn end(&self) -> Vec<f64> {
        (self.pieces[self.pieces.len() - 1].point)(1.0)
    }
}

/// `∫_path F(X)·dX`, composite Simpson with `cfg.quadrature_segments` panels
/// per piece.
pub fn line_integral(f: &VectorField, path: &Path, s: &StructureConstants, cfg: &DiffConfig) -> Result<PolyNumber> {
    let n = s.n();
    tensor::check_dim(n, f.dim())?;
    tensor::check_dim(n, path.dim())?;
    cfg.validate()?;
    let m = cfg.quadrature_segments;
    let h = 1.0 / (2 * m) as f64;
    let mut total = vec![0.0; n];
    for piece in &path.pieces {
        for node in 0..=2 * m {
            let t = node as f64 * h;
            let x = (piece.point)(t);
            f.domain().check(&x)?;
            let term = s.mul(&f.eval(&x), &(piece.velocity)(t));
            let w = if node == 0 || node == 2 * m {
                1.0
            } else if node % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for (acc, v) in total.iter_mut().zip(term) {
                *acc += w * h / 3.0 * v;
            }
        }
    }
    check_finite(&total, "line integral")?;
    Ok(PolyNumber::new(total, s.tag().clone()))
}
