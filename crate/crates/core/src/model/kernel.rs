// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use crate::error::{Error, Result};

/// Stationary or tabulated two-time kernel `K(t, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `a·δ(t − s)`.
    Delta { amplitude: f64 },
    /// `a·(d/dt)δ(t − s)`; convolution with a path gives `a·ẋ`.
    DeltaDerivative { amplitude: f64 },
    /// `a·exp(−|t − s|/τc) / (2τc)`, which tends to `a·δ` as `τc → 0`.
    Exponential {
        amplitude: f64,
        correlation_time: f64,
    },
    Tabulated(TabulatedKernel),
}

/// Kernel values on a square uniform time grid, bilinearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedKernel {
    pub t_start: f64,
    pub dt: f64,
    /// `values[i][j] = K(t_start + i·dt, t_start + j·dt)`.
    pub values: Vec<Vec<f64>>,
    /// Declared symmetry; checked on validation.
    #[serde(default)]
    pub symmetric: bool,
}

impl TabulatedKernel {
    pub fn from_fn(t_start: f64, dt: f64, n: usize, symmetric: bool, k: impl Fn(f64, f64) -> f64) -> Self {
        let t = |i: usize| t_start + i as f64 * dt;
        Self {
            t_start,
            dt,
            values: (0..n).map(|i| (0..n).map(|j| k(t(i), t(j))).collect()).collect(),
            symmetric,
        }
    }

    fn t_end(&self) -> f64 {
        self.t_start + (self.values.len() - 1) as f64 * self.dt
    }

    fn validate(&self) -> Result<()> {
        let n = self.values.len();
        if n < 2 || self.values.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("tabulated kernel must be a square table of size >= 2"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("tabulated kernel needs dt > 0"));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated kernel contains non-finite values"));
        }
        if self.symmetric {
            let scale = self.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                for j in 0..i {
                    if (self.values[i][j] - self.values[j][i]).abs() > 1e-12 * scale.max(1.0) {
                        return Err(Error::invalid(format!(
                            "tabulated kernel declared symmetric but K[{i}][{j}] != K[{j}][{i}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let slack = 1e-9 * self.dt;
        if t < self.t_start - slack || t > self.t_end() + slack {
            return Err(Error::OutOfRange {
                time: t,
                start: self.t_start,
                end: self.t_end(),
            });
        }
        let u = ((t - self.t_start) / self.dt).max(0.0);
        let i = (u.floor() as usize).min(self.values.len() - 2);
        Ok((i, (u - i as f64).clamp(0.0, 1.0)))
    }

    fn value(&self, t: f64, s: f64) -> Result<f64> {
        let (i, a) = self.locate(t)?;
        let (j, b) = self.locate(s)?;
        let v = &self.values;
        Ok((1.0 - a) * (1.0 - b) * v[i][j]
            + a * (1.0 - b) * v[i + 1][j]
            + (1.0 - a) * b * v[i][j + 1]
            + a * b * v[i + 1][j + 1])
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Delta { amplitude } | KernelSpec::DeltaDerivative { amplitude } => {
                if amplitude.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("kernel amplitude must be finite"))
                }
            }
            KernelSpec::Exponential {
                amplitude,
                correlation_time,
            } => {
                if amplitude.is_finite() && *correlation_time > 0.0 && correlation_time.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("exponential kernel needs finite amplitude and correlation time > 0"))
                }
            }
            KernelSpec::Tabulated(t) => t.validate(),
        }
    }

    pub fn zero() -> Self {
        KernelSpec::Delta { amplitude: 0.0 }
    }

    /// Delta-supported kernels act pointwise in time.
    pub fn is_local(&self) -> bool {
        matches!(self, KernelSpec::Delta { .. } | KernelSpec::DeltaDerivative { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            KernelSpec::Delta { amplitude }
            | KernelSpec::DeltaDerivative { amplitude }
            | KernelSpec::Exponential { amplitude, .. } => *amplitude == 0.0,
            KernelSpec::Tabulated(t) => t.values.iter().flatten().all(|v| *v == 0.0),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            KernelSpec::Delta { .. } | KernelSpec::Exponential { .. } => true,
            KernelSpec::DeltaDerivative { amplitude } => *amplitude == 0.0,
            KernelSpec::Tabulated(t) => t.symmetric,
        }
    }

    /// Depends on `t − s` only (and is symmetric), so discretizations are Toeplitz.
    pub fn is_stationary(&self) -> bool {
        matches!(self, KernelSpec::Delta { .. } | KernelSpec::Exponential { .. })
    }

    /// Pointwise value for kernels that are ordinary functions.
    pub fn value(&self, t: f64, s: f64) -> Result<f64> {
        match self {
            KernelSpec::Exponential {
                amplitude,
                correlation_time,
            } => Ok(amplitude * (-(t - s).abs() / correlation_time).exp() / (2.0 * correlation_time)),
            KernelSpec::Tabulated(tab) => tab.value(t, s),
            _ => Err(Error::Kernel(
                "delta-type kernels have no pointwise value".into(),
            )),
        }
    }

    /// Discretize on the `n` time points `t0 + i·dt`.
    pub fn discretize_on(&self, t0: f64, dt: f64, n: usize) -> Result<KernelMatrix> {
        self.validate()?;
        let mut m = DMatrix::zeros(n, n);
        match self {
            KernelSpec::Delta { amplitude } => {
                m.fill_diagonal(amplitude / dt);
            }
            KernelSpec::DeltaDerivative { amplitude } => {
                let c = amplitude / (dt * dt);
                if n >= 2 {
                    m[(0, 0)] = -c;
                    m[(0, 1)] = c;
                    for i in 1..n - 1 {
                        m[(i, i + 1)] = 0.5 * c;
                        m[(i, i - 1)] = -0.5 * c;
                    }
                    m[(n - 1, n - 1)] = c;
                    m[(n - 1, n - 2)] = -c;
                }
            }
            KernelSpec::Exponential { .. } | KernelSpec::Tabulated(_) => {
                let t = |i: usize| t0 + i as f64 * dt;
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = self.value(t(i), t(j))?;
                    }
                }
            }
        }
        Ok(KernelMatrix { matrix: m, t0, dt })
    }
}

/// `n × n` discretization `M[i][j] ≈ K(t_i, t_j)`; convolutions use
/// `Σ_j M[i][j]·v_j·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub matrix: DMatrix<f64>,
    pub t0: f64,
    pub dt: f64,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Discrete convolution `∫ K(t_i, s) v(s) ds ≈ Σ_j M_ij v_j dt`.
    pub fn convolve(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.dim(), "convolution length mismatch");
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().zip(values).map(|(m, v)| m * v).sum::<f64>() * self.dt)
            .collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

/// Discretize `k` on the step-start times `t_0 … t_{n_steps−1}` of `grid`.
pub fn discretize_kernel(k: &KernelSpec, grid: &TimeGrid) -> Result<KernelMatrix> {
    k.discretize_on(grid.t_start(), grid.dt(), grid.n_steps())
}

/// High-temperature Caldeira–Leggett kernels: `D = γ·δ′`, `N = 2γk_BT·δ`.
pub fn cl_kernels(gamma: f64, kbt: f64) -> Result<(KernelSpec, KernelSpec)> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("friction must be >= 0, got {gamma}")));
    }
    if !(kbt >= 0.0 && kbt.is_finite()) {
        return Err(Error::invalid(format!("thermal energy must be >= 0, got {kbt}")));
    }
    Ok((
        KernelSpec::DeltaDerivative { amplitude: gamma },
        KernelSpec::Delta {
            amplitude: 2.0 * gamma * kbt,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cl_kernel_amplitudes() {
        let (d, n) = cl_kernels(0.5, 2.0).unwrap();
        assert_eq!(n, KernelSpec::Delta { amplitude: 2.0 });
        assert_eq!(d, KernelSpec::DeltaDerivative { amplitude: 0.5 });

        let (d, n) = cl_kernels(0.0, 1.0).unwrap();
        assert!(d.is_zero() && n.is_zero());

        assert!(cl_kernels(-0.1, 1.0).is_err());
        assert!(cl_kernels(0.1, -1.0).is_err());
    }

    #[test]
    fn delta_discretizes_to_scaled_identity() {
        let (_, n) = cl_kernels(1.0, 0.5).unwrap();
        let g = TimeGrid::new(1.0, 10).unwrap();
        let m = discretize_kernel(&n, &g).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 10.0 } else { 0.0 };
                assert!((m.matrix[(i, j)] - want).abs() < 1e-12);
            }
        }

        let g = TimeGrid::new(1.0, 100).unwrap();
        let m = discretize_kernel(&KernelSpec::Delta { amplitude: 2.0 }, &g).unwrap();
        assert!((m.matrix[(17, 17)] - 200.0).abs() < 1e-9);
        assert_eq!(m.matrix[(17, 18)], 0.0);
    }

    #[test]
    fn exponential_spot_values_match_formula() {
        let k = KernelSpec::Exponential {
            amplitude: 1.0,
            correlation_time: 0.5,
        };
        let g = TimeGrid::new(2.0, 20).unwrap();
        let m = discretize_kernel(&k, &g).unwrap();
        for &(i, j) in &[(0, 0), (3, 7), (19, 2), (10, 10), (5, 15)] {
            let lag = (i as f64 - j as f64).abs() * 0.1;
            let want = (-lag / 0.5).exp() / (2.0 * 0.5);
            assert!((m.matrix[(i, j)] - want).abs() < 1e-14, "({i},{j})");
        }
        assert_eq!(m.max_asymmetry(), 0.0);
    }

    #[test]
    fn delta_derivative_convolution_of_linear_path_is_constant() {
        let gamma = 0.7;
        let g = TimeGrid::new(1.0, 50).unwrap();
        let m = discretize_kernel(&KernelSpec::DeltaDerivative { amplitude: gamma }, &g).unwrap();
        let path: Vec<f64> = (0..50).map(|k| g.time(k)).collect();
        let out = m.convolve(&path);
        for v in &out {
            assert!((v - gamma).abs() < 1e-10);
        }
        // Antisymmetric in the interior.
        assert!((m.matrix[(10, 11)] + m.matrix[(11, 10)]).abs() < 1e-9);
    }

    #[test]
    fn delta_derivative_convolution_is_second_order_in_interior() {
        let err = |n: usize| {
            let g = TimeGrid::new(1.0, n).unwrap();
            let m = discretize_kernel(&KernelSpec::DeltaDerivative { amplitude: 1.0 }, &g).unwrap();
            let path: Vec<f64> = (0..n).map(|k| g.time(k).sin()).collect();
            let out = m.convolve(&path);
            // Compare at t = 0.5, an interior point on every grid.
            let k = n / 2;
            (out[k] - (0.5f64).cos()).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 3.6 && ratio < 4.4, "ratio {ratio}");
    }

    #[test]
    fn tabulated_kernel_interpolates_and_checks_range() {
        let tab = TabulatedKernel::from_fn(0.0, 0.1, 21, true, |t, s| (-(t - s).abs()).exp());
        let k = KernelSpec::Tabulated(tab);
        k.validate().unwrap();
        // Bilinear interpolation is exact on nodes.
        assert!((k.value(0.3, 0.5).unwrap() - (-0.2f64).exp()).abs() < 1e-12);
        let g = TimeGrid::new(1.0, 10).unwrap();
        let m = discretize_kernel(&k, &g).unwrap();
        assert!((m.matrix[(2, 4)] - (-0.2f64).exp()).abs() < 1e-12);

        let g = TimeGrid::new(3.0, 10).unwrap();
        match discretize_kernel(&k, &g) {
            Err(Error::OutOfRange { .. }) => {}
            other => panic!("expected out-of-range, got {other:?}"),
        }
    }

    #[test]
    fn declared_symmetry_is_checked() {
        let tab = TabulatedKernel::from_fn(0.0, 0.1, 5, true, |t, s| t - 2.0 * s);
        assert!(KernelSpec::Tabulated(tab).validate().is_err());
        let tab = TabulatedKernel::from_fn(0.0, 0.1, 5, false, |t, s| t - 2.0 * s);
        assert!(KernelSpec::Tabulated(tab).validate().is_ok());
    }
}
