// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Wigner functions as weighted phase-space ensembles.
//!
//! Each point is pushed through the Langevin dynamics with its own noise draw
//! and keeps its weight, so `W_τ(x, p) = ∫ P(x, p, τ | x₀, p₀) W₀(x₀, p₀)` is
//! realized by Monte Carlo. Signed states carry signed weights.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_final_state, InitialCondition, IntegratorOptions};
use crate::error::{Error, Result};
use crate::model::{LangevinSpec, TimeGrid};
use crate::noise::build_sampler;
use crate::rng;
use crate::stats::{Gaussian2, PhaseMoments};

/// Initial quantum states with known Wigner functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian {
        mean: [f64; 2],
        cov: [[f64; 2]; 2],
    },
    Coherent {
        alpha_re: f64,
        alpha_im: f64,
        omega: f64,
        mass: f64,
        hbar: f64,
    },
    /// Thermal oscillator state at temperature `kbt`.
    Thermal {
        omega: f64,
        mass: f64,
        kbt: f64,
        hbar: f64,
    },
    /// First excited oscillator state; its Wigner function is negative
    /// around the origin.
    Fock1 {
        omega: f64,
        mass: f64,
        hbar: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

impl StateSpec {
    /// Parse a state from its `kind` name and TOML body.
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(kind) = value.get("kind").and_then(|k| k.as_str()) {
            if !["gaussian", "coherent", "thermal", "fock1"].contains(&kind) {
                return Err(Error::UnknownState(kind.to_string()));
            }
        }
        value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StateSpec::Gaussian { mean, cov } => {
                if !mean.iter().all(|m| m.is_finite()) {
                    return Err(Error::invalid("state mean must be finite"));
                }
                Gaussian2::new(mean, cov)
                    .map(|_| ())
                    .ok_or_else(|| Error::invalid("state covariance is not symmetric PSD"))
            }
            StateSpec::Coherent {
                alpha_re,
                alpha_im,
                omega,
                mass,
                hbar,
            } => {
                if !(alpha_re.is_finite() && alpha_im.is_finite()) {
                    return Err(Error::invalid("coherent amplitude must be finite"));
                }
                positive("omega", omega)?;
                positive("mass", mass)?;
                positive("hbar", hbar)
            }
            StateSpec::Thermal { omega, mass, kbt, hbar } => {
                positive("omega", omega)?;
                positive("mass", mass)?;
                positive("hbar", hbar)?;
                if !(kbt >= 0.0 && kbt.is_finite()) {
                    return Err(Error::invalid(format!("kbt must be non-negative, got {kbt}")));
                }
                Ok(())
            }
            StateSpec::Fock1 { omega, mass, hbar } => {
                positive("omega", omega)?;
                positive("mass", mass)?;
                positive("hbar", hbar)
            }
        }
    }

    /// Mean and covariance of the Gaussian states; `None` for Fock 1.
    pub fn gaussian_moments(&self) -> Option<([f64; 2], [[f64; 2]; 2])> {
        match *self {
            StateSpec::Gaussian { mean, cov } => Some((mean, cov)),
            StateSpec::Coherent {
                alpha_re,
                alpha_im,
                omega,
                mass,
                hbar,
            } => Some((
                [
                    (2.0 * hbar / (mass * omega)).sqrt() * alpha_re,
                    (2.0 * hbar * mass * omega).sqrt() * alpha_im,
                ],
                [[hbar / (2.0 * mass * omega), 0.0], [0.0, mass * omega * hbar / 2.0]],
            )),
            StateSpec::Thermal { omega, mass, kbt, hbar } => {
                let coth = if kbt == 0.0 {
                    1.0
                } else {
                    1.0 / (hbar * omega / (2.0 * kbt)).tanh()
                };
                Some((
                    [0.0, 0.0],
                    [
                        [coth * hbar / (2.0 * mass * omega), 0.0],
                        [0.0, coth * mass * omega * hbar / 2.0],
                    ],
                ))
            }
            StateSpec::Fock1 { .. } => None,
        }
    }

    /// Closed-form `W(x, p)`; `None` for a singular Gaussian.
    pub fn wigner(&self, x: f64, p: f64) -> Option<f64> {
        match *self {
            StateSpec::Fock1 { omega, mass, hbar } => {
                let u = 2.0 * (p * p / (2.0 * mass) + 0.5 * mass * omega * omega * x * x) / (hbar * omega);
                Some((2.0 * u - 1.0) * (-u).exp() / (PI * hbar))
            }
            _ => {
                let (mean, [[a, b], [_, d]]) = self.gaussian_moments()?;
                gaussian_density(mean, a, b, d, x, p)
            }
        }
    }
}

fn gaussian_density(mean: [f64; 2], a: f64, b: f64, d: f64, x: f64, p: f64) -> Option<f64> {
    let det = a * d - b * b;
    if !(det > 0.0) {
        return None;
    }
    let (u, v) = (x - mean[0], p - mean[1]);
    let q = (d * u * u - 2.0 * b * u * v + a * v * v) / det;
    Some((-0.5 * q).exp() / (2.0 * PI * det.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
    pub weight: f64,
}

/// Spread of importance weights for signed states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    /// Variance of `n·wᵢ`; zero for uniform weights.
    pub weight_variance: f64,
    /// `(Σ w)² / Σ w²`.
    pub effective_sample_size: f64,
}

impl WeightDiagnostics {
    fn of(points: &[PhasePoint]) -> Self {
        let n = points.len() as f64;
        let sum: f64 = points.iter().map(|q| q.weight).sum();
        let sq: f64 = points.iter().map(|q| q.weight * q.weight).sum();
        let mean = sum / n;
        Self {
            weight_variance: n * n * (sq / n - mean * mean),
            effective_sample_size: sum * sum / sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMetadata {
    pub state: Option<StateSpec>,
    pub time: f64,
    pub weights: Option<WeightDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerEnsemble {
    pub points: Vec<PhasePoint>,
    pub metadata: EnsembleMetadata,
}

impl WignerEnsemble {
    pub fn new(points: Vec<PhasePoint>, time: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a Wigner ensemble needs at least one point"));
        }
        if !points.iter().all(|q| q.x.is_finite() && q.p.is_finite() && q.weight.is_finite()) {
            return Err(Error::invalid("phase points must be finite"));
        }
        Ok(Self {
            points,
            metadata: EnsembleMetadata {
                state: None,
                time,
                weights: None,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.points.iter().map(|q| q.weight).sum()
    }

    /// Weighted moments of `(x, p)`.
    pub fn moments(&self) -> PhaseMoments {
        let xs: Vec<f64> = self.points.iter().map(|q| q.x).collect();
        let ps: Vec<f64> = self.points.iter().map(|q| q.p).collect();
        let ws: Vec<f64> = self.points.iter().map(|q| q.weight).collect();
        PhaseMoments::from_samples(&xs, &ps, &ws)
    }

    pub fn weight_diagnostics(&self) -> WeightDiagnostics {
        WeightDiagnostics::of(&self.points)
    }
}

/// Sampling envelope for Fock 1: a Gaussian with 1.5× the state's marginal
/// variances `(3/2)ħ/mω` and `(3/2)ħmω`.
fn fock1_envelope(omega: f64, mass: f64, hbar: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let vx = 1.5 * 1.5 * hbar / (mass * omega);
    let vp = 1.5 * 1.5 * hbar * mass * omega;
    ([0.0, 0.0], [[vx, 0.0], [0.0, vp]])
}

/// `n` points drawn from the state. Point `i` uses stream `i` of `seed`.
pub fn sample_initial_state(state: &StateSpec, n: usize, seed: u64) -> Result<WignerEnsemble> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    state.validate()?;
    let draw = |g: &Gaussian2, i: usize| g.sample(&mut rng::stream(seed, rng::domain::STATE, i as u64));
    let (points, weights) = match *state {
        StateSpec::Fock1 { omega, mass, hbar } => {
            let (mean, cov) = fock1_envelope(omega, mass, hbar);
            let g = Gaussian2::new(mean, cov).expect("envelope covariance is diagonal positive");
            let raw: Vec<PhasePoint> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let [x, p] = draw(&g, i);
                    let env = gaussian_density(mean, cov[0][0], 0.0, cov[1][1], x, p).unwrap();
                    PhasePoint {
                        x,
                        p,
                        weight: state.wigner(x, p).unwrap() / env,
                    }
                })
                .collect();
            let total: f64 = raw.iter().map(|q| q.weight).sum();
            if !(total.abs() > 0.0) {
                return Err(Error::invalid("importance weights sum to zero"));
            }
            let points: Vec<PhasePoint> = raw
                .into_iter()
                .map(|q| PhasePoint {
                    weight: q.weight / total,
                    ..q
                })
                .collect();
            let diag = WeightDiagnostics::of(&points);
            (points, Some(diag))
        }
        _ => {
            let (mean, cov) = state.gaussian_moments().unwrap();
            let g = Gaussian2::new(mean, cov).ok_or_else(|| Error::invalid("state covariance is not PSD"))?;
            let w = 1.0 / n as f64;
            let points = (0..n)
                .into_par_iter()
                .map(|i| {
                    let [x, p] = draw(&g, i);
                    PhasePoint { x, p, weight: w }
                })
                .collect();
            (points, None)
        }
    };
    Ok(WignerEnsemble {
        points,
        metadata: EnsembleMetadata {
            state: Some(*state),
            time: 0.0,
            weights,
        },
    })
}

/// Push every point through the dynamics over `grid` (of duration `tau`).
/// Point `i` starts at `(xᵢ, pᵢ/m)` and uses noise draw `i` of `seed`;
/// weights are untouched.
pub fn propagate_wigner(
    ens: &WignerEnsemble,
    spec: &LangevinSpec,
    tau: f64,
    grid: &TimeGrid,
    seed: u64,
) -> Result<WignerEnsemble> {
    propagate_wigner_with(ens, spec, tau, grid, seed, &IntegratorOptions::default())
}

pub fn propagate_wigner_with(
    ens: &WignerEnsemble,
    spec: &LangevinSpec,
    tau: f64,
    grid: &TimeGrid,
    seed: u64,
    opts: &IntegratorOptions,
) -> Result<WignerEnsemble> {
    if tau == 0.0 {
        return Ok(ens.clone());
    }
    if !(tau > 0.0) || (grid.duration() - tau).abs() > 1e-9 * tau.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "grid spans {} but tau is {tau}",
            grid.duration()
        )));
    }
    spec.validate()?;
    let sampler = build_sampler(&spec.noise, grid, seed)?;
    let m = spec.mass;
    let moved: Vec<Result<PhasePoint>> = ens
        .points
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let wrap = |e| Error::Trajectory {
                index: i,
                source: Box::new(e),
            };
            let init = InitialCondition::new(q.x, q.p / m).map_err(wrap)?;
            let (x, v) = integrate_final_state(spec, init, &sampler.sample(i as u64), grid, opts).map_err(wrap)?;
            Ok(PhasePoint {
                x,
                p: m * v,
                weight: q.weight,
            })
        })
        .collect();
    let points = moved.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(WignerEnsemble {
        points,
        metadata: EnsembleMetadata {
            time: ens.metadata.time + tau,
            ..ens.metadata.clone()
        },
    })
}

/// Rectangular phase-space window split into `nx × np` bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl PhaseWindow {
    pub fn new(x: (f64, f64), p: (f64, f64), nx: usize, np: usize) -> Result<Self> {
        let w = Self {
            x_min: x.0,
            x_max: x.1,
            p_min: p.0,
            p_max: p.1,
            nx,
            np,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(Error::invalid("a window needs at least 2 bins per axis"));
        }
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        if !(ok(self.x_min, self.x_max) && ok(self.p_min, self.p_max)) {
            return Err(Error::invalid("window ranges must be finite and increasing"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn bin_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn p_center(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    /// Row-major index `i·np + j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    /// Bin containing `(x, p)`; the upper edges are exclusive.
    pub fn locate(&self, x: f64, p: f64) -> Option<(usize, usize)> {
        let u = (x - self.x_min) / self.dx();
        let v = (p - self.p_min) / self.dp();
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let (i, j) = (u as usize, v as usize);
        (i < self.nx && j < self.np).then_some((i, j))
    }
}

/// Binned Wigner function; `density[index(i, j)]` is the value on bin `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub window: PhaseWindow,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `∫∫ W dx dp` over the window.
    pub normalization: f64,
    /// Signed weight inside the window over the total signed weight.
    pub in_window_fraction: f64,
}

impl WignerGrid {
    /// Exact values `f` at the bin centers (no sampling error).
    pub fn from_fn(window: PhaseWindow, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        window.validate()?;
        let mut density = vec![0.0; window.nx * window.np];
        for i in 0..window.nx {
            for j in 0..window.np {
                density[window.index(i, j)] = f(window.x_center(i), window.p_center(j));
            }
        }
        Ok(Self::from_density(window, density))
    }

    pub(crate) fn from_density(window: PhaseWindow, density: Vec<f64>) -> Self {
        let normalization = density.iter().sum::<f64>() * window.bin_area();
        Self {
            window,
            stderr: vec![0.0; density.len()],
            density,
            normalization,
            in_window_fraction: 1.0,
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.density[self.window.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.density.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the smallest bin value.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, &d) in self.density.iter().enumerate() {
            if d < self.density[best] {
                best = k;
            }
        }
        best
    }

    /// Mean and covariance of `(x, p)` treating bin values as point masses at
    /// the centers, normalized by the grid mass.
    pub fn moments(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let w = &self.window;
        let (mut s0, mut sx, mut sp, mut sxx, mut spp, mut sxp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..w.nx {
            let x = w.x_center(i);
            for j in 0..w.np {
                let p = w.p_center(j);
                let d = self.value(i, j);
                s0 += d;
                sx += d * x;
                sp += d * p;
                sxx += d * x * x;
                spp += d * p * p;
                sxp += d * x * p;
            }
        }
        let (mx, mp) = (sx / s0, sp / s0);
        (
            [mx, mp],
            [
                [sxx / s0 - mx * mx, sxp / s0 - mx * mp],
                [sxp / s0 - mx * mp, spp / s0 - mp * mp],
            ],
        )
    }
}

/// Signed-weight histogram of `ens` on `window`, divided by the bin area.
/// The per-bin standard error is `sqrt(Σw² − (Σw)²/n) / area`.
pub fn estimate_grid(ens: &WignerEnsemble, window: &PhaseWindow) -> Result<WignerGrid> {
    window.validate()?;
    let cells = window.nx * window.np;
    let mut sum = vec![0.0; cells];
    let mut sq = vec![0.0; cells];
    let mut inside = 0usize;
    let mut inside_weight = 0.0;
    for q in &ens.points {
        if let Some((i, j)) = window.locate(q.x, q.p) {
            let k = window.index(i, j);
            sum[k] += q.weight;
            sq[k] += q.weight * q.weight;
            inside += 1;
            inside_weight += q.weight;
        }
    }
    if inside == 0 {
        return Err(Error::EmptyWindow);
    }
    let n = ens.len() as f64;
    let area = window.bin_area();
    let stderr = sum
        .iter()
        .zip(&sq)
        .map(|(s, s2)| (s2 - s * s / n).max(0.0).sqrt() / area)
        .collect();
    let density: Vec<f64> = sum.iter().map(|s| s / area).collect();
    Ok(WignerGrid {
        window: *window,
        normalization: inside_weight,
        in_window_fraction: inside_weight / ens.weight_sum(),
        density,
        stderr,
    })
}

/// `∫∫ max(−W, 0) dx dp` on the grid.
pub fn negativity(grid: &WignerGrid) -> f64 {
    grid.density.iter().map(|&d| (-d).max(0.0)).sum::<f64>() * grid.window.bin_area()
}

/// Negativity of the Fock-1 Wigner function, `2e^{−1/2} − 1`.
pub fn fock1_negativity() -> f64 {
    2.0 * (-0.5f64).exp() - 1.0
}

/// CSV with columns `x, p, W, stderr` at bin centers.
pub fn write_grid_csv<W: Write>(mut out: W, grid: &WignerGrid) -> io::Result<()> {
    writeln!(out, "x,p,W,stderr")?;
    let w = &grid.window;
    for i in 0..w.nx {
        for j in 0..w.np {
            let k = w.index(i, j);
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                w.x_center(i),
                w.p_center(j),
                grid.density[k],
                grid.stderr[k]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;

    fn unit_coherent() -> StateSpec {
        StateSpec::Coherent {
            alpha_re: 0.0,
            alpha_im: 0.0,
            omega: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }

    fn fock() -> StateSpec {
        StateSpec::Fock1 {
            omega: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }

    #[test]
    fn delta_state() {
        let s = StateSpec::Gaussian {
            mean: [1.5, -2.0],
            cov: [[0.0, 0.0], [0.0, 0.0]],
        };
        let ens = sample_initial_state(&s, 10, 1).unwrap();
        assert!(ens.points.iter().all(|q| q.x == 1.5 && q.p == -2.0));
        assert!((ens.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_moments() {
        let ens = sample_initial_state(&unit_coherent(), 100_000, 4).unwrap();
        let m = ens.moments();
        assert!(m.mean_x.z_score(0.0) < 5.0 && m.mean_p.z_score(0.0) < 5.0);
        assert!(m.var_x.z_score(0.5) < 5.0 && m.var_p.z_score(0.5) < 5.0);
    }

    #[test]
    fn analytic_densities_are_normalized() {
        let states = [
            unit_coherent(),
            StateSpec::Thermal {
                omega: 2.0,
                mass: 0.5,
                kbt: 1.0,
                hbar: 1.0,
            },
            fock(),
        ];
        for s in states {
            let h = 0.02;
            let mut total = 0.0;
            for i in 0..800 {
                for j in 0..800 {
                    let (x, p) = (-8.0 + (i as f64 + 0.5) * h, -8.0 + (j as f64 + 0.5) * h);
                    total += s.wigner(x, p).unwrap() * h * h;
                }
            }
            assert!((total - 1.0).abs() < 1e-6, "{s:?}: {total}");
        }
        assert!((fock().wigner(0.0, 0.0).unwrap() + 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn fock1_importance_weights() {
        let ens = sample_initial_state(&fock(), 200_000, 9).unwrap();
        assert!((ens.weight_sum() - 1.0).abs() < 1e-12);
        assert!(ens.points.iter().any(|q| q.weight < 0.0));
        let d = ens.metadata.weights.unwrap();
        assert!(d.effective_sample_size > 0.1 * ens.len() as f64 && d.effective_sample_size < ens.len() as f64);
        // ⟨x²⟩ = ⟨p²⟩ = 3/2 for the first excited state.
        let m = ens.moments();
        assert!(m.var_x.z_score(1.5) < 5.0 && m.var_p.z_score(1.5) < 5.0);
        // W(0, 0) from the bins around the origin.
        let w = PhaseWindow::new((-0.1, 0.1), (-0.1, 0.1), 2, 2).unwrap();
        let g = estimate_grid(&ens, &w).unwrap();
        let origin: f64 = g.density.iter().sum::<f64>() / 4.0;
        let se = g.stderr.iter().map(|s| s * s).sum::<f64>().sqrt() / 4.0;
        // Bin averages of W differ from W(0, 0) by O(h²) ≈ 3e-3 relative.
        assert!((origin + 1.0 / PI).abs() < 5.0 * se + 2e-3, "{origin} ± {se}");
    }

    #[test]
    fn single_point_histogram() {
        let ens = WignerEnsemble::new(vec![PhasePoint { x: 0.3, p: 0.3, weight: 1.0 }], 0.0).unwrap();
        let w = PhaseWindow::new((0.0, 1.0), (0.0, 2.0), 2, 4).unwrap();
        let g = estimate_grid(&ens, &w).unwrap();
        assert_eq!(g.value(0, 0), 1.0 / w.bin_area());
        assert_eq!(g.density.iter().filter(|&&d| d != 0.0).count(), 1);
        assert_eq!(negativity(&g), 0.0);
        let far = PhaseWindow::new((5.0, 6.0), (0.0, 1.0), 2, 2).unwrap();
        assert_eq!(estimate_grid(&ens, &far), Err(Error::EmptyWindow));
    }

    #[test]
    fn coherent_histogram_matches_bin_averages() {
        let s = unit_coherent();
        let ens = sample_initial_state(&s, 100_000, 21).unwrap();
        let w = PhaseWindow::new((-2.0, 2.0), (-2.0, 2.0), 5, 5).unwrap();
        let g = estimate_grid(&ens, &w).unwrap();
        assert!((g.normalization - g.in_window_fraction).abs() < 1e-9);
        let (mut worst, mut chi2): (f64, f64) = (0.0, 0.0);
        for i in 0..5 {
            for j in 0..5 {
                // Bin average of W by a 20×20 midpoint rule.
                let mut avg = 0.0;
                for a in 0..20 {
                    for b in 0..20 {
                        let x = w.x_min + (i as f64 + (a as f64 + 0.5) / 20.0) * w.dx();
                        let p = w.p_min + (j as f64 + (b as f64 + 0.5) / 20.0) * w.dp();
                        avg += s.wigner(x, p).unwrap() / 400.0;
                    }
                }
                let k = w.index(i, j);
                let z = (g.density[k] - avg) / g.stderr[k];
                worst = worst.max(z.abs());
                chi2 += z * z;
            }
        }
        // 25 bins: chi-squared per bin near 1, and the largest |z| below the
        // two-sided 0.1% Bonferroni point 3.9.
        assert!(chi2 / 25.0 > 0.4 && chi2 / 25.0 < 1.8, "chi2/dof {}", chi2 / 25.0);
        assert!(worst < 3.9, "worst bin {worst} SE");
    }

    #[test]
    fn propagation_preserves_weights_and_identity_at_zero() {
        let spec = LangevinSpec::caldeira_leggett(1.0, Potential::harmonic(1.0, 1.0), 0.5, 2.0).unwrap();
        let ens = sample_initial_state(&fock(), 1000, 2).unwrap();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        assert_eq!(propagate_wigner(&ens, &spec, 0.0, &grid, 5).unwrap(), ens);
        let out = propagate_wigner(&ens, &spec, 1.0, &grid, 5).unwrap();
        assert_eq!(out.weight_sum(), ens.weight_sum());
        assert_eq!(out.metadata.time, 1.0);
        assert!(propagate_wigner(&ens, &spec, 2.0, &grid, 5).is_err());
    }

    #[test]
    fn unknown_state_kind() {
        assert_eq!(
            StateSpec::from_toml("kind = \"squeezed\"\nr = 1.0"),
            Err(Error::UnknownState("squeezed".into()))
        );
        let s = StateSpec::from_toml("kind = \"fock1\"\nomega = 1.0\nmass = 1.0\nhbar = 1.0").unwrap();
        assert_eq!(s, fock());
    }
}
