// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::table::Table1d;
use crate::error::{Error, Result};

/// External potential `V(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Free,
    /// `V = ½ k x²` with `k = m ω²`.
    Harmonic { stiffness: f64 },
    /// `V = ½ a x² + ¼ b x⁴`.
    Quartic { a: f64, b: f64 },
    Tabulated(Table1d),
}

impl Potential {
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Potential::Harmonic {
            stiffness: mass * omega * omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Free => Ok(()),
            Potential::Harmonic { stiffness } if stiffness.is_finite() => Ok(()),
            Potential::Quartic { a, b } if a.is_finite() && b.is_finite() => Ok(()),
            Potential::Tabulated(t) => t.validate(),
            other => Err(Error::invalid(format!("non-finite potential parameters: {other:?}"))),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness } => 0.5 * stiffness * x * x,
            Potential::Quartic { a, b } => {
                let x2 = x * x;
                0.5 * a * x2 + 0.25 * b * x2 * x2
            }
            Potential::Tabulated(t) => t.value(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { stiffness } => stiffness * x,
            Potential::Quartic { a, b } => a * x + b * x * x * x,
            Potential::Tabulated(t) => t.derivative(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-5;
        for p in [
            Potential::Free,
            Potential::harmonic(2.0, 1.5),
            Potential::Quartic { a: -1.0, b: 0.5 },
        ] {
            for &x in &[-1.7, 0.0, 0.4, 2.2] {
                let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
                assert!((fd - p.derivative(x)).abs() < 1e-6, "{p:?} at {x}");
            }
        }
    }

    #[test]
    fn tabulated_harmonic_converges_at_second_order() {
        // Sample a quartic so the centered difference has an O(h²) error term;
        // probe points are nodes of both tables.
        let exact = |x: f64| x + x.powi(3);
        let err = |h: f64| {
            let n = (8.0 / h).round() as usize + 1;
            let t = Table1d::from_fn(-4.0, h, n, |x| 0.5 * x * x + 0.25 * x.powi(4)).unwrap();
            let p = Potential::Tabulated(t);
            [-1.32, 0.2, 1.72]
                .iter()
                .map(|&x| (p.derivative(x) - exact(x)).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        assert!(e1 / e2 > 3.5 && e1 / e2 < 4.5, "ratio {}", e1 / e2);

        let t = Table1d::from_fn(-4.0, 0.05, 161, |x| 0.5 * 3.0 * x * x).unwrap();
        let p = Potential::Tabulated(t);
        for &x in &[-2.01, 0.33, 3.9] {
            assert!((p.derivative(x) - 3.0 * x).abs() < 1e-9);
        }
    }
}
