// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::table::Table1d;
use crate::error::{Error, Result};

/// System coupling function `f(x)` (or dissipation function `g(x)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingFunction {
    /// `f(x) = x`.
    Linear,
    Constant { value: f64 },
    /// `f(x) = c·xⁿ`.
    Power { coefficient: f64, exponent: i32 },
    Tabulated(Table1d),
}

impl CouplingFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            CouplingFunction::Linear => Ok(()),
            CouplingFunction::Constant { value } if value.is_finite() => Ok(()),
            CouplingFunction::Power {
                coefficient,
                exponent,
            } if coefficient.is_finite() && *exponent >= 0 => Ok(()),
            CouplingFunction::Tabulated(t) => t.validate(),
            other => Err(Error::invalid(format!("invalid coupling function {other:?}"))),
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            CouplingFunction::Linear => x,
            CouplingFunction::Constant { value } => *value,
            CouplingFunction::Power {
                coefficient,
                exponent,
            } => coefficient * x.powi(*exponent),
            CouplingFunction::Tabulated(t) => t.value(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            CouplingFunction::Linear => 1.0,
            CouplingFunction::Constant { .. } => 0.0,
            CouplingFunction::Power {
                coefficient,
                exponent,
            } => match exponent {
                0 => 0.0,
                n => coefficient * *n as f64 * x.powi(n - 1),
            },
            CouplingFunction::Tabulated(t) => t.derivative(x),
        }
    }

    /// Closed-form derivative as a coupling function, when one exists.
    pub fn derivative_function(&self) -> Option<CouplingFunction> {
        match self.canonical() {
            CouplingFunction::Constant { .. } => Some(CouplingFunction::Constant { value: 0.0 }),
            CouplingFunction::Power {
                coefficient,
                exponent,
            } => Some(
                CouplingFunction::Power {
                    coefficient: coefficient * exponent as f64,
                    exponent: exponent - 1,
                }
                .canonical(),
            ),
            _ => None,
        }
    }

    /// Normal form used for structural comparison: `x` and `c·x⁰` collapse to
    /// power/constant forms, zero coefficients to the zero constant.
    pub fn canonical(&self) -> CouplingFunction {
        match self {
            CouplingFunction::Linear => CouplingFunction::Power {
                coefficient: 1.0,
                exponent: 1,
            },
            CouplingFunction::Power {
                coefficient,
                exponent,
            } if *exponent == 0 || *coefficient == 0.0 => CouplingFunction::Constant {
                value: if *exponent == 0 { *coefficient } else { 0.0 },
            },
            other => other.clone(),
        }
    }

    /// `c·f`, in canonical form except that a unit-coefficient `x` stays
    /// [`CouplingFunction::Linear`].
    pub fn scaled(&self, c: f64) -> CouplingFunction {
        let out = match self.canonical() {
            CouplingFunction::Constant { value } => CouplingFunction::Constant { value: c * value },
            CouplingFunction::Power {
                coefficient,
                exponent,
            } => CouplingFunction::Power {
                coefficient: c * coefficient,
                exponent,
            }
            .canonical(),
            CouplingFunction::Tabulated(t) => CouplingFunction::Tabulated(Table1d {
                values: t.values.iter().map(|v| c * v).collect(),
                ..t
            }),
            CouplingFunction::Linear => unreachable!("canonical form has no Linear variant"),
        };
        match out {
            CouplingFunction::Power {
                coefficient: 1.0,
                exponent: 1,
            } => CouplingFunction::Linear,
            other => other,
        }
    }

    /// Structural equality after canonicalization.
    pub fn same_as(&self, other: &CouplingFunction) -> bool {
        self.canonical() == other.canonical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let h = 1e-6;
        for c in [
            CouplingFunction::Linear,
            CouplingFunction::Constant { value: 2.5 },
            CouplingFunction::Power {
                coefficient: 0.7,
                exponent: 3,
            },
        ] {
            for &x in &[-1.2, 0.3, 2.0] {
                let fd = (c.value(x + h) - c.value(x - h)) / (2.0 * h);
                assert!((fd - c.derivative(x)).abs() < 1e-6, "{c:?} at {x}");
            }
        }
    }

    #[test]
    fn symbolic_derivative_chain() {
        let cube = CouplingFunction::Power {
            coefficient: 2.0,
            exponent: 3,
        };
        let d1 = cube.derivative_function().unwrap();
        assert!(d1.same_as(&CouplingFunction::Power {
            coefficient: 6.0,
            exponent: 2
        }));
        assert!(CouplingFunction::Linear
            .scaled(0.5)
            .same_as(&CouplingFunction::Power {
                coefficient: 0.5,
                exponent: 1
            }));
        assert_eq!(CouplingFunction::Linear.scaled(1.0), CouplingFunction::Linear);
        let d = CouplingFunction::Linear.derivative_function().unwrap();
        assert!(d.same_as(&CouplingFunction::Constant { value: 1.0 }));
        assert!(CouplingFunction::Linear.same_as(&CouplingFunction::Power {
            coefficient: 1.0,
            exponent: 1
        }));
    }

    #[test]
    fn negative_powers_rejected() {
        let c = CouplingFunction::Power {
            coefficient: 1.0,
            exponent: -1,
        };
        assert!(c.validate().is_err());
    }
}
