// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gaussian influence functionals equivalent to a Langevin equation.
//!
//! A path pair is written in mean/difference coordinates `x = (q + q′)/2`,
//! `y = q − q′`. Both exponent conventions are available:
//!
//! * [`CouplingConvention::Langevin`]:
//!   `−(1/2ħ²) ∬ y f(x) N f(x′) y′ − (i/ħ) ∬ y g(x) D`,
//! * [`CouplingConvention::Qisd`], the strong-decoherence expansion:
//!   `−½ ∬ y f′(x) N f′(x′) y′ + (i/ħ) ∬ y f′(x) D f(x′)`.
//!
//! Double integrals are sums over interior grid points with the kernels
//! discretized on the interior times.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplingConvention, CouplingFunction, KernelSpec, LangevinSpec, Potential, TimeGrid};
use crate::noise::PsdFactor;

#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PathPair {
    pub fn new(grid: TimeGrid, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.n_points() || y.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "path pair needs {} points, got x: {} y: {}",
                grid.n_points(),
                x.len(),
                y.len()
            )));
        }
        Ok(Self { grid, x, y })
    }

    /// From forward and backward branches `q`, `q′`.
    pub fn from_branches(grid: TimeGrid, q: &[f64], q_prime: &[f64]) -> Result<Self> {
        if q.len() != q_prime.len() {
            return Err(Error::GridMismatch("branches differ in length".into()));
        }
        let x = q.iter().zip(q_prime).map(|(a, b)| 0.5 * (a + b)).collect();
        let y = q.iter().zip(q_prime).map(|(a, b)| a - b).collect();
        Self::new(grid, x, y)
    }

    /// `(q, q′) = (x + y/2, x − y/2)`.
    pub fn branches(&self) -> (Vec<f64>, Vec<f64>) {
        let q = self.x.iter().zip(&self.y).map(|(x, y)| x + 0.5 * y).collect();
        let qp = self.x.iter().zip(&self.y).map(|(x, y)| x - 0.5 * y).collect();
        (q, qp)
    }
}

/// Where `g` is evaluated in the dissipative phase of the Langevin
/// convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationPlacement {
    /// `y_t g(x_t) D(t, t′)`.
    #[default]
    OuterTime,
    /// `y_t D(t, t′) g(x_{t′})`, the form obtained by averaging the noise
    /// out of the constrained equation of motion.
    InnerTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceFunctionalSpec {
    pub f: CouplingFunction,
    pub g: CouplingFunction,
    pub dissipation: KernelSpec,
    pub noise: KernelSpec,
    pub hbar: f64,
    pub convention: CouplingConvention,
    #[serde(default)]
    pub placement: DissipationPlacement,
}

/// Reject noise kernels that cannot be the covariance of a Gaussian field.
fn check_noise_psd(noise: &KernelSpec) -> Result<()> {
    let negative = |a: f64| Error::NotPositiveSemidefinite { min_eigenvalue: a };
    match noise {
        KernelSpec::Delta { amplitude } | KernelSpec::Exponential { amplitude, .. } => {
            if *amplitude < 0.0 {
                return Err(negative(*amplitude));
            }
            Ok(())
        }
        KernelSpec::Tabulated(t) => {
            if !t.symmetric {
                return Err(Error::invalid("tabulated noise kernel must be declared symmetric"));
            }
            if noise.is_zero() {
                return Ok(());
            }
            let n = t.values.len();
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| t.values[i][j]);
            PsdFactor::new(&m).map(|_| ())
        }
        KernelSpec::DeltaDerivative { amplitude } if *amplitude == 0.0 => Ok(()),
        KernelSpec::DeltaDerivative { .. } => Err(Error::invalid("noise kernel must be symmetric")),
    }
}

/// Influence functional of a Langevin spec: the same functions and kernels,
/// with the noise kernel checked for positive semidefiniteness.
pub fn build_influence_functional(spec: &LangevinSpec) -> Result<InfluenceFunctionalSpec> {
    spec.validate()?;
    check_noise_psd(&spec.noise)?;
    Ok(InfluenceFunctionalSpec {
        f: spec.f.clone(),
        g: spec.g.clone(),
        dissipation: spec.dissipation.clone(),
        noise: spec.noise.clone(),
        hbar: spec.hbar,
        convention: spec.convention,
        placement: DissipationPlacement::default(),
    })
}

/// `c` when `f′` is the constant `c`.
fn constant_slope(f: &CouplingFunction) -> Option<f64> {
    match f.derivative_function()? {
        CouplingFunction::Constant { value } => Some(value),
        _ => None,
    }
}

impl InfluenceFunctionalSpec {
    /// The same Langevin equation written in the other convention.
    ///
    /// A strong-decoherence coupling `f_Q` with constant slope `c` gives the
    /// Langevin pair `f = c`, `g = c·f_Q`; conversely a Langevin pair needs a
    /// constant noise coupling `c ≠ 0` and `g/c` of slope `c`. Other
    /// couplings have no exact counterpart and are rejected.
    pub fn to_convention(&self, target: CouplingConvention) -> Result<Self> {
        if target == self.convention {
            return Ok(self.clone());
        }
        let (f, g) = match target {
            CouplingConvention::Langevin => {
                let c = constant_slope(&self.f).ok_or_else(|| {
                    Error::invalid("only couplings with constant slope have an exact Langevin form")
                })?;
                (CouplingFunction::Constant { value: c }, self.f.scaled(c))
            }
            CouplingConvention::Qisd => {
                let c = match self.f.canonical() {
                    CouplingFunction::Constant { value } if value != 0.0 => value,
                    _ => return Err(Error::invalid("the noise coupling must be a nonzero constant")),
                };
                let f_q = self.g.scaled(1.0 / c);
                if constant_slope(&f_q) != Some(c) {
                    return Err(Error::invalid("g/f must have slope f for an exact strong-decoherence form"));
                }
                (f_q.clone(), f_q)
            }
        };
        Ok(Self {
            f,
            g,
            convention: target,
            ..self.clone()
        })
    }

    /// Langevin equation generated by this functional.
    pub fn langevin_spec(&self, mass: f64, potential: Potential) -> Result<LangevinSpec> {
        LangevinSpec::new(
            mass,
            potential,
            self.f.clone(),
            self.g.clone(),
            self.dissipation.clone(),
            self.noise.clone(),
            self.convention,
        )?
        .with_hbar(self.hbar)
    }
}

/// Complex exponent of the influence functional on `pair`.
pub fn evaluate_influence_exponent(ifs: &InfluenceFunctionalSpec, pair: &PathPair) -> Result<Complex64> {
    let n_points = pair.grid.n_points();
    if pair.x.len() != n_points || pair.y.len() != n_points {
        return Err(Error::GridMismatch("path pair length differs from its grid".into()));
    }
    if n_points < 3 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let dt = pair.grid.dt();
    let interior = 1..n_points - 1;
    let n = n_points - 2;
    let t1 = pair.grid.time(1);
    let x = &pair.x[interior.clone()];
    let y = &pair.y[interior];
    let hbar = ifs.hbar;

    let real = if ifs.noise.is_zero() {
        0.0
    } else {
        let weight: Vec<f64> = match ifs.convention {
            CouplingConvention::Langevin => x.iter().zip(y).map(|(xk, yk)| yk * ifs.f.value(*xk)).collect(),
            CouplingConvention::Qisd => x.iter().zip(y).map(|(xk, yk)| yk * ifs.f.derivative(*xk)).collect(),
        };
        let m = ifs.noise.discretize_on(t1, dt, n)?;
        let quad: f64 = weight.iter().zip(m.convolve(&weight)).map(|(a, b)| a * b).sum::<f64>() * dt;
        match ifs.convention {
            CouplingConvention::Langevin => -quad / (2.0 * hbar * hbar),
            CouplingConvention::Qisd => -0.5 * quad,
        }
    };

    let imag = if ifs.dissipation.is_zero() {
        0.0
    } else {
        let d = ifs.dissipation.discretize_on(t1, dt, n)?;
        match ifs.convention {
            CouplingConvention::Langevin => {
                let (outer, inner): (Vec<f64>, Vec<f64>) = match ifs.placement {
                    DissipationPlacement::OuterTime => (
                        x.iter().zip(y).map(|(xk, yk)| yk * ifs.g.value(*xk)).collect(),
                        vec![1.0; n],
                    ),
                    DissipationPlacement::InnerTime => (y.to_vec(), x.iter().map(|xk| ifs.g.value(*xk)).collect()),
                };
                -outer.iter().zip(d.convolve(&inner)).map(|(a, b)| a * b).sum::<f64>() * dt / hbar
            }
            CouplingConvention::Qisd => {
                let outer: Vec<f64> = x.iter().zip(y).map(|(xk, yk)| yk * ifs.f.derivative(*xk)).collect();
                let inner: Vec<f64> = x.iter().map(|xk| ifs.f.value(*xk)).collect();
                outer.iter().zip(d.convolve(&inner)).map(|(a, b)| a * b).sum::<f64>() * dt / hbar
            }
        }
    };
    Ok(Complex64::new(real, imag))
}

/// `exp(Re exponent)`, the suppression of the off-diagonal element.
pub fn decoherence_factor(ifs: &InfluenceFunctionalSpec, pair: &PathPair) -> Result<f64> {
    Ok(evaluate_influence_exponent(ifs, pair)?.re.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cl_kernels;

    fn cl_ifs(convention: CouplingConvention, hbar: f64) -> InfluenceFunctionalSpec {
        let spec = LangevinSpec::caldeira_leggett(1.0, Potential::harmonic(1.0, 1.0), 0.5, 2.0)
            .unwrap()
            .with_hbar(hbar)
            .unwrap()
            .with_convention(convention);
        build_influence_functional(&spec).unwrap()
    }

    fn constant_pair(n: usize, tau: f64, x: f64, y: f64) -> PathPair {
        let grid = TimeGrid::new(tau, n).unwrap();
        PathPair::new(grid, vec![x; n + 1], vec![y; n + 1]).unwrap()
    }

    #[test]
    fn cl_kernels_are_copied() {
        let ifs = cl_ifs(CouplingConvention::Qisd, 1.0);
        assert_eq!(ifs.noise, KernelSpec::Delta { amplitude: 2.0 });
        assert_eq!(ifs.dissipation, KernelSpec::DeltaDerivative { amplitude: 0.5 });
    }

    #[test]
    fn four_slice_hand_sum() {
        // τ = 1, n = 4: interior points t = 0.25, 0.5, 0.75; M = (2/0.25)·I.
        let ifs = cl_ifs(CouplingConvention::Langevin, 0.7);
        let e = evaluate_influence_exponent(&ifs, &constant_pair(4, 1.0, 1.0, 0.3)).unwrap();
        let hand = -(1.0 / (2.0 * 0.49)) * 3.0 * (0.3 * 0.3) * (2.0 / 0.25) * 0.25 * 0.25;
        assert!((e.re - hand).abs() < 1e-15, "{} vs {hand}", e.re);
        // −(γk_BT/ħ²) y₀² (τ − dt)
        assert!((e.re + 1.0 / 0.49 * 0.09 * 0.75).abs() < 1e-14);
    }

    #[test]
    fn fine_grid_constant_separation() {
        let ifs = cl_ifs(CouplingConvention::Langevin, 1.0);
        let e = evaluate_influence_exponent(&ifs, &constant_pair(10_000, 2.0, 1.0, 0.5)).unwrap();
        assert!((e.re + 0.25 * 2.0).abs() < 1e-3);
    }

    #[test]
    fn convention_ratio_is_hbar_squared() {
        let hbar = 0.37;
        let pair = constant_pair(50, 1.0, 1.0, 0.8);
        let a = evaluate_influence_exponent(&cl_ifs(CouplingConvention::Qisd, hbar), &pair).unwrap();
        let b = evaluate_influence_exponent(&cl_ifs(CouplingConvention::Langevin, hbar), &pair).unwrap();
        assert!((a.re / b.re - hbar * hbar).abs() < 1e-12);
    }

    #[test]
    fn closed_system_has_unit_factor() {
        let spec = LangevinSpec::closed(1.0, Potential::Free).unwrap();
        let ifs = build_influence_functional(&spec).unwrap();
        let pair = constant_pair(20, 1.0, 0.4, 2.0);
        assert_eq!(evaluate_influence_exponent(&ifs, &pair).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(decoherence_factor(&ifs, &pair).unwrap(), 1.0);
    }

    #[test]
    fn rejects_indefinite_noise() {
        let mut spec = LangevinSpec::caldeira_leggett(1.0, Potential::Free, 0.5, 2.0).unwrap();
        spec.noise = KernelSpec::Delta { amplitude: -1.0 };
        assert!(matches!(
            build_influence_functional(&spec),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        spec.noise = KernelSpec::Tabulated(crate::model::TabulatedKernel::from_fn(0.0, 0.1, 10, true, |t, s| {
            if t == s {
                0.0
            } else {
                1.0
            }
        }));
        assert!(matches!(
            build_influence_functional(&spec),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn cl_round_trip_through_langevin_form() {
        let ifs = cl_ifs(CouplingConvention::Qisd, 1.0);
        let lang = ifs.to_convention(CouplingConvention::Langevin).unwrap();
        assert!(lang.f.same_as(&CouplingFunction::Constant { value: 1.0 }));
        assert!(lang.g.same_as(&CouplingFunction::Linear));
        let back = lang.to_convention(CouplingConvention::Qisd).unwrap();
        assert!(back.f.same_as(&ifs.f) && back.g.same_as(&ifs.f));
        let (d, n) = cl_kernels(0.5, 2.0).unwrap();
        assert_eq!((back.dissipation, back.noise), (d, n));
    }

    #[test]
    fn nonlinear_coupling_has_no_exact_langevin_form() {
        let mut ifs = cl_ifs(CouplingConvention::Qisd, 1.0);
        ifs.f = CouplingFunction::Power {
            coefficient: 1.0,
            exponent: 2,
        };
        assert!(ifs.to_convention(CouplingConvention::Langevin).is_err());
    }

    #[test]
    fn branches_round_trip() {
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let pair = PathPair::from_branches(grid, &[1.0, 2.0, 3.0, 4.0], &[0.0, 2.0, 1.0, 5.0]).unwrap();
        assert_eq!(pair.y, vec![1.0, 0.0, 2.0, -1.0]);
        let (q, qp) = pair.branches();
        assert_eq!(q, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(qp, vec![0.0, 2.0, 1.0, 5.0]);
    }

    #[test]
    fn placement_changes_only_the_imaginary_part() {
        let mut ifs = cl_ifs(CouplingConvention::Langevin, 1.0);
        ifs.dissipation = KernelSpec::Exponential {
            amplitude: 1.0,
            correlation_time: 0.3,
        };
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let x: Vec<f64> = grid.times().iter().map(|t| t.sin()).collect();
        let y: Vec<f64> = grid.times().iter().map(|t| 0.2 + t).collect();
        let pair = PathPair::new(grid, x, y).unwrap();
        let a = evaluate_influence_exponent(&ifs, &pair).unwrap();
        ifs.placement = DissipationPlacement::InnerTime;
        let b = evaluate_influence_exponent(&ifs, &pair).unwrap();
        assert_eq!(a.re, b.re);
        assert!((a.im - b.im).abs() > 1e-6);
    }
}
