// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values sampled on a uniform 1-d grid `x_min + i·dx`.
///
/// Evaluation interpolates linearly and extrapolates with the end segments.
/// The derivative is the centered difference of the interpolant with step
/// `dx`, which is exact for quadratics because the interpolation error is
/// `dx`-periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1d {
    pub x_min: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Table1d {
    pub fn new(x_min: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        let table = Self { x_min, dx, values };
        table.validate()?;
        Ok(table)
    }

    /// Tabulate `f` on `n` points starting at `x_min`.
    pub fn from_fn(x_min: f64, dx: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(x_min, dx, (0..n).map(|i| f(x_min + i as f64 * dx)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::invalid("tabulated function needs at least two points"));
        }
        if !(self.dx > 0.0) || !self.x_min.is_finite() {
            return Err(Error::invalid("tabulated function needs finite x_min and dx > 0"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated function contains non-finite values"));
        }
        Ok(())
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.values.len() - 1) as f64 * self.dx
    }

    pub fn value(&self, x: f64) -> f64 {
        let last = self.values.len() - 2;
        let u = (x - self.x_min) / self.dx;
        let i = (u.floor().max(0.0) as usize).min(last);
        let frac = u - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.value(x + self.dx) - self.value(x - self.dx)) / (2.0 * self.dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_nodes_exactly() {
        let t = Table1d::new(-1.0, 0.5, vec![3.0, 1.0, 0.0, 1.0, 3.0]).unwrap();
        assert_eq!(t.value(-1.0), 3.0);
        assert_eq!(t.value(0.0), 0.0);
        assert_eq!(t.value(0.25), 0.5);
        assert_eq!(t.x_max(), 1.0);
    }

    #[test]
    fn centered_derivative_is_exact_for_quadratics() {
        let t = Table1d::from_fn(-5.0, 0.1, 101, |x| 0.5 * 2.0 * x * x).unwrap();
        for &x in &[-3.3, -0.07, 0.0, 1.234, 4.0] {
            assert!((t.derivative(x) - 2.0 * x).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn rejects_short_or_bad_tables() {
        assert!(Table1d::new(0.0, 0.1, vec![1.0]).is_err());
        assert!(Table1d::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(Table1d::new(0.0, 0.1, vec![1.0, f64::NAN]).is_err());
    }
}
