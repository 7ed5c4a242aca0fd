use std::io::Write;

use crate::error::{invalid, Error, Result};

/// How a [`MonotoneGrid`] is read between abscissae.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Right-continuous step: `f(x) = y_k` on `[x_k, x_{k+1})`.
    Step,
    /// Piecewise linear.
    Linear,
}

/// A sampled non-decreasing function with its right-continuous pseudo-inverse
/// `f⁻¹(y) = inf{x : f(x) > y}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    interp: Interp,
}

impl MonotoneGrid {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, interp: Interp) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(invalid("grid", "abscissae and ordinates must be non-empty and of equal length"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid", "abscissae must be strictly increasing"));
        }
        if ys.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(invalid("grid", "ordinates must be non-decreasing"));
        }
        Ok(Self { xs, ys, interp })
    }

    /// Grid `x_k = x0 + k·dx`.
    pub fn uniform(x0: f64, dx: f64, ys: Vec<f64>, interp: Interp) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(invalid("dx", "must be positive"));
        }
        let xs = (0..ys.len()).map(|k| x0 + k as f64 * dx).collect();
        Self::new(xs, ys, interp)
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.xs
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ys
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().unwrap())
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::Truncation(format!("{x} outside grid domain [{lo}, {hi}]")));
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        match self.interp {
            Interp::Step => Ok(self.ys[k]),
            Interp::Linear => {
                if k + 1 == self.xs.len() {
                    return Ok(self.ys[k]);
                }
                let w = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
                Ok(self.ys[k] + w * (self.ys[k + 1] - self.ys[k]))
            }
        }
    }

    /// `inf{x : f(x) > y}`. Errors if the grid does not bracket `y`.
    pub fn pseudo_inverse(&self, y: f64) -> Result<f64> {
        let k = self.ys.partition_point(|&v| v <= y);
        if k == self.ys.len() {
            return Err(Error::Truncation(format!(
                "level {y} not exceeded on grid (max {})",
                self.ys[k - 1]
            )));
        }
        if k == 0 {
            return Err(Error::Truncation(format!(
                "level {y} below grid range (min {})",
                self.ys[0]
            )));
        }
        match self.interp {
            Interp::Step => Ok(self.xs[k]),
            Interp::Linear => {
                let (y0, y1) = (self.ys[k - 1], self.ys[k]);
                let w = (y - y0) / (y1 - y0);
                Ok(self.xs[k - 1] + w * (self.xs[k] - self.xs[k - 1]))
            }
        }
    }

    pub fn write_csv<W: Write>(&self, x_name: &str, y_name: &str, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{x_name},{y_name}")?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            writeln!(out, "{x},{y}")?;
        }
        Ok(())
    }
}
