//! Uniform real-axis grids with declared constant asymptotics.

use crate::C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid mismatch: {0}")]
    Mismatch(String),
    #[error("sample count must be odd and match the extent")]
    BadShape,
    #[error("tail deviates from the declared asymptote by {0:.3e}")]
    TailDeviation(f64),
}

/// Complex samples on `v = -V, -V+h, ..., V` plus the constant value the
/// function approaches at `±∞`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunction {
    pub half_width: f64,
    pub step: f64,
    pub samples: Vec<C64>,
    pub c_inf: C64,
}

impl GridFunction {
    /// Number of points for half-width `v` and step `h` (odd; `v = 0`
    /// is always a sample).
    pub fn len_for(half_width: f64, step: f64) -> usize {
        2 * (half_width / step).round() as usize + 1
    }

    pub fn from_fn(half_width: f64, step: f64, c_inf: C64, f: impl Fn(f64) -> C64) -> Self {
        let len = Self::len_for(half_width, step);
        let samples = (0..len).map(|i| f(-half_width + step * i as f64)).collect();
        Self { half_width, step, samples, c_inf }
    }

    pub fn constant(half_width: f64, step: f64, value: C64) -> Self {
        Self::from_fn(half_width, step, value, |_| value)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn point(&self, i: usize) -> f64 {
        -self.half_width + self.step * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Largest deviation of the two outermost samples from `c_inf`.
    pub fn tail_deviation(&self) -> f64 {
        let first = (self.samples[0] - self.c_inf).norm();
        let last = (self.samples[self.len() - 1] - self.c_inf).norm();
        first.max(last)
    }

    pub fn check_shape(&self) -> Result<(), GridError> {
        if self.len() != Self::len_for(self.half_width, self.step) || self.len() % 2 == 0 {
            return Err(GridError::BadShape);
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.half_width - other.half_width).abs() < 1e-12
            && (self.step - other.step).abs() < 1e-12
    }

    /// Cubic (4-point Lagrange) interpolation at an arbitrary point inside
    /// the grid; clamps to the asymptote outside.
    pub fn interpolate(&self, x: f64) -> C64 {
        let n = self.len();
        let t = (x + self.half_width) / self.step;
        if t <= 0.0 || t >= (n - 1) as f64 {
            return self.c_inf;
        }
        let i1 = (t.floor() as usize).clamp(1, n - 3);
        let base = i1 - 1;
        let s = t - i1 as f64;
        // Lagrange weights on offsets -1, 0, 1, 2
        let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        self.samples[base] * w0
            + self.samples[base + 1] * w1
            + self.samples[base + 2] * w2
            + self.samples[base + 3] * w3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shape_and_points() {
        let g = GridFunction::constant(30.0, 0.05, C64::new(1.0, 0.0));
        assert_eq!(g.len(), 1201);
        assert!(g.check_shape().is_ok());
        assert_relative_eq!(g.point(600), 0.0, epsilon = 1e-12);
        assert_relative_eq!(g.point(0), -30.0);
    }

    #[test]
    fn interpolation_is_cubic_exact() {
        let f = |x: f64| C64::new(0.3 * x * x * x - x + 2.0, 0.1 * x * x);
        let g = GridFunction::from_fn(5.0, 0.1, C64::new(0.0, 0.0), f);
        for &x in &[0.123, -2.7183, 3.9999, -4.95] {
            let got = g.interpolate(x);
            assert!((got - f(x)).norm() < 1e-10, "at {x}");
        }
    }

    #[test]
    fn tail_deviation_measures_edges() {
        let g = GridFunction::from_fn(10.0, 0.5, C64::new(2.0, 0.0), |x| {
            C64::new(2.0 + (-x.abs()).exp(), 0.0)
        });
        assert!(g.tail_deviation() < 1e-4);
    }
}
