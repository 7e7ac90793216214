//! Axis-aligned sampling grids and deterministic parallel sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor grid over a box with `points` samples per axis (endpoints included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub points: usize,
}

impl Grid {
    pub fn new(min: Vec<f64>, max: Vec<f64>, points: usize) -> Result<Self> {
        let g = Self { min, max, points };
        g.validate()?;
        Ok(g)
    }

    /// `[lo, hi]^n` with `points` samples per axis.
    pub fn cube(n: usize, lo: f64, hi: f64, points: usize) -> Self {
        Self { min: vec![lo; n], max: vec![hi; n], points }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() || self.min.is_empty() {
            return Err(Error::Invalid("grid min/max must have equal, nonzero length".into()));
        }
        if self.points == 0 {
            return Err(Error::Invalid("grid needs at least one point per axis".into()));
        }
        if self.min.iter().zip(&self.max).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Invalid("grid bounds must be finite with min <= max".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `idx`-th point in row-major order (last axis fastest).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for axis in (0..n).rev() {
            let t = idx % self.points;
            idx /= self.points;
            x[axis] = if self.points == 1 {
                0.5 * (self.min[axis] + self.max[axis])
            } else {
                let frac = t as f64 / (self.points - 1) as f64;
                self.min[axis] + frac * (self.max[axis] - self.min[axis])
            };
        }
        x
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

/// Per-point residual norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Norms {
    pub max_abs: f64,
    pub frobenius: f64,
}

impl Norms {
    pub fn of(values: &[f64]) -> Self {
        Self {
            max_abs: if values.iter().any(|v| v.is_nan()) {
                f64::NAN
            } else {
                values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            },
            frobenius: values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Summary of a residual evaluated over every grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub per_point: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub max_frobenius: f64,
}

/// Evaluates `f` at every grid point in parallel; results keep grid order.
pub fn sweep<F>(grid: &Grid, f: F) -> Result<Sweep>
where
    F: Fn(&[f64]) -> Result<Norms> + Sync,
{
    grid.validate()?;
    let norms: Vec<Norms> = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect::<Result<_>>()?;
    let per_point: Vec<f64> = norms.iter().map(|n| n.max_abs).collect();
    let max =
        if per_point.iter().any(|v| v.is_nan()) { f64::NAN } else { per_point.iter().fold(0.0_f64, |m, v| m.max(*v)) };
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    let max_frobenius = norms.iter().fold(0.0_f64, |m, v| m.max(v.frobenius));
    Ok(Sweep { per_point, max, mean, max_frobenius })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_cover_box() {
        let g = Grid::cube(2, -1.0, 1.0, 3);
        let pts: Vec<_> = g.iter().collect();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], vec![-1.0, -1.0]);
        assert_eq!(pts[1], vec![-1.0, 0.0]);
        assert_eq!(pts[8], vec![1.0, 1.0]);
        assert_eq!(Grid::cube(3, 0.0, 2.0, 1).point(0), vec![1.0; 3]);
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::new(vec![0.0], vec![1.0, 2.0], 2).is_err());
        assert!(Grid::new(vec![1.0], vec![0.0], 2).is_err());
        assert!(Grid::new(vec![0.0], vec![1.0], 0).is_err());
    }

    #[test]
    fn sweep_is_ordered() {
        let g = Grid::cube(1, 0.0, 4.0, 5);
        let s = sweep(&g, |x| Ok(Norms::of(&[x[0]]))).unwrap();
        assert_eq!(s.per_point, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.mean, 2.0);
    }
}
