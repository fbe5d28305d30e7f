// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Integration of `m ẍ + V′(x) + drive[x] = c(x)·η`.
//!
//! White noise with a local dissipation kernel uses a BAOAB splitting whose
//! O sub-step solves the friction/noise part exactly. Everything else is
//! integrated as an ODE driven by the pre-sampled noise path with Heun's
//! method, the memory drive evaluated by trapezoidal quadrature over the
//! realized history.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CouplingConvention, KernelSpec, LangevinSpec, TimeGrid};
use crate::noise::{build_sampler, NoisePath, NoiseSampler};
use crate::rng;
use crate::stats::{Gaussian2, PhaseMoments};

/// `|f′(x)|` below this aborts a QISD-convention step.
pub const JACOBIAN_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub x0: f64,
    pub v0: f64,
}

impl InitialCondition {
    pub fn new(x0: f64, v0: f64) -> Result<Self> {
        if !(x0.is_finite() && v0.is_finite()) {
            return Err(Error::invalid("initial condition must be finite"));
        }
        Ok(Self { x0, v0 })
    }
}

/// Positions and velocities at every grid point, both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != grid.n_points() || v.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "trajectory needs {} points, got x: {} v: {}",
                grid.n_points(),
                x.len(),
                v.len()
            )));
        }
        Ok(Self { grid, x, v })
    }

    /// Path given by positions only; velocities from central differences.
    pub fn from_positions(grid: TimeGrid, x: Vec<f64>) -> Result<Self> {
        if x.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "trajectory needs {} points, got {}",
                grid.n_points(),
                x.len()
            )));
        }
        let v = finite_difference_velocity(&x, grid.dt());
        Ok(Self { grid, x, v })
    }

    pub fn final_state(&self) -> (f64, f64) {
        (*self.x.last().unwrap(), *self.v.last().unwrap())
    }
}

pub(crate) fn finite_difference_velocity(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| match k {
            0 => (x[1] - x[0]) / dt,
            k if k == n - 1 => (x[k] - x[k - 1]) / dt,
            k => (x[k + 1] - x[k - 1]) / (2.0 * dt),
        })
        .collect()
}

/// Where in a step the position-dependent noise coupling is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationPoint {
    /// Start of the step (Itô-like).
    #[default]
    PreStep,
    /// Midpoint of the drift sub-steps (Stratonovich-like).
    MidStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// BAOAB splitting for white noise and local dissipation.
    Splitting,
    /// Heun's method driven by a pre-sampled noise path.
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOptions {
    #[serde(default)]
    pub evaluation: EvaluationPoint,
    /// Forced scheme; automatic when `None`.
    #[serde(default)]
    pub scheme: Option<Scheme>,
}

/// Default scheme for a spec.
pub fn select_scheme(spec: &LangevinSpec) -> Scheme {
    if matches!(spec.noise, KernelSpec::Delta { .. }) && spec.dissipation.is_local() {
        Scheme::Splitting
    } else {
        Scheme::Heun
    }
}

pub fn integrate_langevin(
    spec: &LangevinSpec,
    init: InitialCondition,
    noise: &NoisePath,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    integrate_langevin_with(spec, init, noise, grid, &IntegratorOptions::default())
}

pub fn integrate_langevin_with(
    spec: &LangevinSpec,
    init: InitialCondition,
    noise: &NoisePath,
    grid: &TimeGrid,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if noise.grid != *grid || noise.values.len() != grid.n_steps() {
        return Err(Error::GridMismatch("noise path is defined on a different grid".into()));
    }
    match opts.scheme.unwrap_or_else(|| select_scheme(spec)) {
        Scheme::Splitting => {
            if !spec.dissipation.is_local() {
                return Err(Error::invalid(
                    "the splitting scheme needs a local (delta-type) dissipation kernel",
                ));
            }
            let mut x = Vec::with_capacity(grid.n_points());
            let mut v = Vec::with_capacity(grid.n_points());
            splitting(spec, init, noise, grid, opts.evaluation, &mut |_, (xk, vk)| {
                x.push(xk);
                v.push(vk);
            })?;
            Ok(Trajectory { grid: *grid, x, v })
        }
        Scheme::Heun => heun(spec, init, noise, grid, opts.evaluation),
    }
}

/// Final state `(x(τ), v(τ))` without storing the path.
pub fn integrate_final_state(
    spec: &LangevinSpec,
    init: InitialCondition,
    noise: &NoisePath,
    grid: &TimeGrid,
    opts: &IntegratorOptions,
) -> Result<(f64, f64)> {
    let mut last = (init.x0, init.v0);
    integrate_observed(spec, init, noise, grid, opts, &mut |_, s| last = s)?;
    Ok(last)
}

/// Integrate, calling `observe(k, (x_k, v_k))` at every grid point.
pub fn integrate_observed(
    spec: &LangevinSpec,
    init: InitialCondition,
    noise: &NoisePath,
    grid: &TimeGrid,
    opts: &IntegratorOptions,
    observe: &mut dyn FnMut(usize, (f64, f64)),
) -> Result<()> {
    let scheme = opts.scheme.unwrap_or_else(|| select_scheme(spec));
    if scheme == Scheme::Splitting && spec.dissipation.is_local() {
        if noise.grid != *grid {
            return Err(Error::GridMismatch("noise path is defined on a different grid".into()));
        }
        splitting(spec, init, noise, grid, opts.evaluation, observe)?;
        return Ok(());
    }
    let traj = integrate_langevin_with(spec, init, noise, grid, opts)?;
    for k in 0..traj.x.len() {
        observe(k, (traj.x[k], traj.v[k]));
    }
    Ok(())
}

#[inline]
fn check_jacobian(spec: &LangevinSpec, c: f64, k: usize) -> Result<()> {
    if spec.convention == CouplingConvention::Qisd && !(c.abs() >= JACOBIAN_THRESHOLD) {
        return Err(Error::SingularJacobian { index: k, value: c.abs() });
    }
    Ok(())
}

/// `sqrt((1 − e^{−2h}) / 2h)`, the O-step noise factor relative to `√dt`.
#[inline]
fn ou_noise_factor(h: f64) -> f64 {
    if h.abs() < 1e-10 {
        1.0 - 0.5 * h
    } else {
        (-(-2.0 * h).exp_m1() / (2.0 * h)).sqrt()
    }
}

/// BAOAB step sequence, reporting every grid point to `observe`.
fn splitting(
    spec: &LangevinSpec,
    init: InitialCondition,
    noise: &NoisePath,
    grid: &TimeGrid,
    evaluation: EvaluationPoint,
    observe: &mut dyn FnMut(usize, (f64, f64)),
) -> Result<()> {
    let n = grid.n_steps();
    let dt = grid.dt();
    let m = spec.mass;
    let (friction_amp, position_amp) = match spec.dissipation {
        KernelSpec::DeltaDerivative { amplitude } => (amplitude, 0.0),
        KernelSpec::Delta { amplitude } => (0.0, amplitude),
        _ => unreachable!("splitting requires a local dissipation kernel"),
    };
    let force = |x: f64| {
        let mut f = -spec.potential.derivative(x);
        if position_amp != 0.0 {
            f -= position_amp * spec.drive_prefactor(x) * spec.drive_source(x);
        }
        f
    };
    let rate = |x: f64| {
        if friction_amp == 0.0 {
            0.0
        } else {
            friction_amp * spec.drive_prefactor(x) * spec.drive_source_derivative(x) / m
        }
    };

    let (mut x, mut v) = (init.x0, init.v0);
    let mut f = force(x);
    observe(0, (x, v));
    for k in 0..n {
        v += 0.5 * dt * f / m;
        let x_pre = x;
        x += 0.5 * dt * v;
        let xe = match evaluation {
            EvaluationPoint::PreStep => x_pre,
            EvaluationPoint::MidStep => x,
        };
        let c = spec.noise_coupling(xe);
        check_jacobian(spec, c, k)?;
        let h = rate(xe) * dt;
        v = (-h).exp() * v + (c / m) * noise.values[k] * dt * ou_noise_factor(h);
        x += 0.5 * dt * v;
        f = force(x);
        v += 0.5 * dt * f / m;
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::Divergence { index: k + 1 });
        }
        observe(k + 1, (x, v));
    }
    Ok(())
}

/// Trapezoidal history integral `∫₀^{t_k} D(t_k, s) src(x_s) ds` with the
/// last source value replaced by `last`.
fn history_integral(kernel: &KernelSpec, grid: &TimeGrid, sources: &[f64], k: usize, last: f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let t = grid.time(k);
    let mut sum = 0.5 * kernel.value(t, grid.time(0))? * sources[0];
    for (j, s) in sources.iter().enumerate().take(k).skip(1) {
        sum += kernel.value(t, grid.time(j))? * s;
    }
    sum += 0.5 * kernel.value(t, t)? * last;
    Ok(sum * grid.dt())
}

fn heun(
    spec: &LangevinSpec,
    init: InitialCondition,
    noise: &NoisePath,
    grid: &TimeGrid,
    evaluation: EvaluationPoint,
) -> Result<Trajectory> {
    let n = grid.n_steps();
    let dt = grid.dt();
    let m = spec.mass;
    let local = spec.dissipation.is_local();
    let zero_drive = spec.dissipation.is_zero();
    let mut xs = Vec::with_capacity(n + 1);
    let mut vs = Vec::with_capacity(n + 1);
    let mut sources: Vec<f64> = Vec::with_capacity(if local { 0 } else { n + 1 });

    let drive = |k: usize, x: f64, v: f64, sources: &[f64]| -> Result<f64> {
        if zero_drive {
            return Ok(0.0);
        }
        match spec.local_drive(x, v) {
            Some(d) => Ok(d),
            None => Ok(spec.drive_prefactor(x)
                * history_integral(&spec.dissipation, grid, sources, k, spec.drive_source(x))?),
        }
    };

    let (mut x, mut v) = (init.x0, init.v0);
    xs.push(x);
    vs.push(v);
    if !local {
        sources.push(spec.drive_source(x));
    }
    for k in 0..n {
        let x_pred = x + v * dt;
        let xe = match evaluation {
            EvaluationPoint::PreStep => x,
            EvaluationPoint::MidStep => 0.5 * (x + x_pred),
        };
        let c = spec.noise_coupling(xe);
        check_jacobian(spec, c, k)?;
        let kick = c * noise.values[k];

        let a = (-spec.potential.derivative(x) - drive(k, x, v, &sources)? + kick) / m;
        let v_pred = v + a * dt;
        if !local {
            sources.push(spec.drive_source(x_pred));
        }
        let a_pred = (-spec.potential.derivative(x_pred) - drive(k + 1, x_pred, v_pred, &sources)? + kick) / m;
        x += 0.5 * (v + v_pred) * dt;
        v += 0.5 * (a + a_pred) * dt;
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::Divergence { index: k + 1 });
        }
        if !local {
            *sources.last_mut().unwrap() = spec.drive_source(x);
        }
        xs.push(x);
        vs.push(v);
    }
    Ok(Trajectory {
        grid: *grid,
        x: xs,
        v: vs,
    })
}

/// Memory drive `prefactor(x_k) Σ_j D_kj src(x_j) dt` along a given path,
/// using the discretized dissipation kernel on all grid points. Local kernels
/// apply their full stencil row; history kernels use causal trapezoid weights.
pub fn memory_drive_along(spec: &LangevinSpec, x: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    if x.len() != grid.n_points() {
        return Err(Error::GridMismatch("path length differs from grid".into()));
    }
    let n = x.len();
    let dt = grid.dt();
    if spec.dissipation.is_zero() {
        return Ok(vec![0.0; n]);
    }
    let kernel = spec.dissipation.discretize_on(grid.t_start(), dt, n)?;
    let src: Vec<f64> = x.iter().map(|&xi| spec.drive_source(xi)).collect();
    let local = spec.dissipation.is_local();
    Ok((0..n)
        .map(|k| {
            let row = kernel.matrix.row(k);
            let integral = if local {
                row.iter().zip(&src).map(|(d, s)| d * s).sum::<f64>() * dt
            } else if k == 0 {
                0.0
            } else {
                let inner: f64 = (1..k).map(|j| row[j] * src[j]).sum();
                (inner + 0.5 * (row[0] * src[0] + row[k] * src[k])) * dt
            };
            spec.drive_prefactor(x[k]) * integral
        })
        .collect())
}

/// Kinetic plus potential energy.
pub fn energy(spec: &LangevinSpec, x: f64, v: f64) -> f64 {
    0.5 * spec.mass * v * v + spec.potential.value(x)
}

/// Distribution of `(x₀, v₀)` for ensemble members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDistribution {
    Point { x0: f64, v0: f64 },
    /// Gaussian in `(x, v)`.
    Gaussian { mean: [f64; 2], cov: [[f64; 2]; 2] },
}

impl InitialDistribution {
    pub fn point(init: InitialCondition) -> Self {
        InitialDistribution::Point {
            x0: init.x0,
            v0: init.v0,
        }
    }

    fn sampler(&self) -> Result<Option<Gaussian2>> {
        match self {
            InitialDistribution::Point { x0, v0 } => {
                InitialCondition::new(*x0, *v0)?;
                Ok(None)
            }
            InitialDistribution::Gaussian { mean, cov } => Gaussian2::new(*mean, *cov)
                .map(Some)
                .ok_or_else(|| Error::invalid("initial covariance is not symmetric PSD")),
        }
    }

    /// Initial condition of member `index`, keyed like the noise draws.
    pub fn draw(&self, seed: u64, index: u64) -> Result<InitialCondition> {
        match (self, self.sampler()?) {
            (InitialDistribution::Point { x0, v0 }, _) => InitialCondition::new(*x0, *v0),
            (_, Some(g)) => {
                let [x0, v0] = g.sample(&mut rng::stream(seed, rng::domain::INITIAL, index));
                InitialCondition::new(x0, v0)
            }
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    #[default]
    Abort,
    /// Record failed members and continue.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnsembleOptions {
    pub integrator: IntegratorOptions,
    pub on_failure: FailurePolicy,
}

/// Trajectories with their member indices, plus recorded failures.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub members: Vec<(usize, Trajectory)>,
    pub failures: Vec<(usize, Error)>,
}

/// Successful members and failures, both tagged with the member index.
type Outcomes<T> = (Vec<(usize, T)>, Vec<(usize, Error)>);

fn run_members<T: Send>(
    spec: &LangevinSpec,
    init: &InitialDistribution,
    grid: &TimeGrid,
    n_traj: usize,
    seed: u64,
    opts: &EnsembleOptions,
    member: impl Fn(&NoiseSampler, InitialCondition, usize) -> Result<T> + Sync,
) -> Result<Outcomes<T>> {
    if n_traj == 0 {
        return Err(Error::invalid("ensemble needs at least one trajectory"));
    }
    spec.validate()?;
    init.sampler()?;
    let sampler = build_sampler(&spec.noise, grid, seed)?;
    let results: Vec<(usize, Result<T>)> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let r = init
                .draw(seed, i as u64)
                .and_then(|ic| member(&sampler, ic, i));
            (i, r)
        })
        .collect();
    let mut ok = Vec::with_capacity(n_traj);
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(t) => ok.push((i, t)),
            Err(e) => match opts.on_failure {
                FailurePolicy::Abort => {
                    return Err(Error::Trajectory {
                        index: i,
                        source: Box::new(e),
                    })
                }
                FailurePolicy::Skip => failures.push((i, e)),
            },
        }
    }
    Ok((ok, failures))
}

/// `n_traj` independent trajectories; member `i` uses noise draw `i` and the
/// `i`-th initial-condition draw, both keyed by `seed`.
pub fn run_ensemble(
    spec: &LangevinSpec,
    init: &InitialDistribution,
    grid: &TimeGrid,
    n_traj: usize,
    seed: u64,
    opts: &EnsembleOptions,
) -> Result<Ensemble> {
    let (members, failures) = run_members(spec, init, grid, n_traj, seed, opts, |sampler, ic, i| {
        integrate_langevin_with(spec, ic, &sampler.sample(i as u64), grid, &opts.integrator)
    })?;
    Ok(Ensemble { members, failures })
}

/// Ensemble statistics at every `record_every`-th grid point (and the last).
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    /// Moments of `(x, v)`; the `p` slots hold velocities.
    pub moments: Vec<PhaseMoments>,
    pub n_members: usize,
    pub failures: Vec<(usize, Error)>,
}

pub fn recorded_indices(grid: &TimeGrid, record_every: usize) -> Vec<usize> {
    let stride = record_every.max(1);
    let mut idx: Vec<usize> = (0..=grid.n_steps()).step_by(stride).collect();
    if *idx.last().unwrap() != grid.n_steps() {
        idx.push(grid.n_steps());
    }
    idx
}

/// Streamed ensemble statistics; trajectories are not kept in memory.
pub fn run_ensemble_summary(
    spec: &LangevinSpec,
    init: &InitialDistribution,
    grid: &TimeGrid,
    n_traj: usize,
    seed: u64,
    record_every: usize,
    opts: &EnsembleOptions,
) -> Result<EnsembleSummary> {
    let indices = recorded_indices(grid, record_every);
    let stride = record_every.max(1);
    let last = grid.n_steps();
    let (rows, failures) = run_members(spec, init, grid, n_traj, seed, opts, |sampler, ic, i| {
        let mut rec = Vec::with_capacity(indices.len());
        integrate_observed(spec, ic, &sampler.sample(i as u64), grid, &opts.integrator, &mut |k, s| {
            if k % stride == 0 || k == last {
                rec.push(s);
            }
        })?;
        Ok(rec)
    })?;
    if rows.is_empty() {
        return Err(Error::invalid("every trajectory in the ensemble failed"));
    }
    let moments = (0..indices.len())
        .map(|r| {
            let xs: Vec<f64> = rows.iter().map(|(_, rec)| rec[r].0).collect();
            let vs: Vec<f64> = rows.iter().map(|(_, rec)| rec[r].1).collect();
            PhaseMoments::uniform(&xs, &vs)
        })
        .collect();
    Ok(EnsembleSummary {
        times: indices.iter().map(|&k| grid.time(k)).collect(),
        moments,
        n_members: rows.len(),
        failures,
    })
}

/// CSV with columns `t, mean_x, mean_v, var_x, var_v, cov_xv` followed by
/// their standard errors.
pub fn write_summary_csv<W: Write>(mut out: W, summary: &EnsembleSummary) -> io::Result<()> {
    writeln!(
        out,
        "t,mean_x,mean_v,var_x,var_v,cov_xv,se_mean_x,se_mean_v,se_var_x,se_var_v,se_cov_xv"
    )?;
    for (t, m) in summary.times.iter().zip(&summary.moments) {
        let a = m.as_array();
        write!(out, "{t:.16e}")?;
        for e in &a {
            write!(out, ",{:.16e}", e.value)?;
        }
        for e in &a {
            write!(out, ",{:.16e}", e.stderr)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Full trajectory dump with columns `trajectory_id, t, x, v`.
pub fn write_trajectories_csv<W: Write>(mut out: W, ensemble: &Ensemble) -> io::Result<()> {
    writeln!(out, "trajectory_id,t,x,v")?;
    for (id, traj) in &ensemble.members {
        for k in 0..traj.x.len() {
            writeln!(out, "{id},{:.16e},{:.16e},{:.16e}", traj.grid.time(k), traj.x[k], traj.v[k])?;
        }
    }
    Ok(())
}
