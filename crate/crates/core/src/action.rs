// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Onsager–Machlup weight of a path.
//!
//! The residual `ρ_k = (m ẍ_k + V′(x_k) + drive_k) / c(x_k)` is formed at the
//! interior grid points with central differences and
//! `S = ½ ρᵀ M⁻¹ ρ`, where `M` is the noise kernel discretized on the interior
//! times. For white noise `M = (A/dt)·I` and this is `Σ ρ² dt / 2A`.

use crate::dynamics::{memory_drive_along, Trajectory, JACOBIAN_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::LangevinSpec;
use crate::noise::PsdFactor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    /// The exponent `S`; the path density is proportional to `e^{−S}`.
    pub s: f64,
    /// `−Σ log|c(x_k)|` over interior points. Path-independent constants of
    /// the measure are dropped.
    pub log_measure_correction: f64,
    /// `−s + log_measure_correction`.
    pub total_log_weight: f64,
}

impl ActionValue {
    fn new(s: f64, log_measure_correction: f64) -> Self {
        Self {
            s,
            log_measure_correction,
            total_log_weight: -s + log_measure_correction,
        }
    }
}

fn check_length(traj: &Trajectory) -> Result<usize> {
    let n = traj.grid.n_steps();
    if n < 2 {
        return Err(Error::invalid("the action needs at least one interior grid point"));
    }
    if traj.x.len() != n + 1 {
        return Err(Error::GridMismatch("trajectory length differs from its grid".into()));
    }
    Ok(n)
}

/// `m ẍ_k + V′(x_k)` at interior points `k = 1..n−1`.
fn inertial_residual(traj: &Trajectory, spec: &LangevinSpec) -> Vec<f64> {
    let x = &traj.x;
    let dt = traj.grid.dt();
    (1..x.len() - 1)
        .map(|k| spec.mass * (x[k + 1] - 2.0 * x[k] + x[k - 1]) / (dt * dt) + spec.potential.derivative(x[k]))
        .collect()
}

/// Action of `traj` under `spec`, using the closed Caldeira–Leggett form
/// when the spec is exactly Brownian motion.
pub fn om_action(traj: &Trajectory, spec: &LangevinSpec) -> Result<ActionValue> {
    match spec.cl_parameters() {
        Some((gamma, kbt)) => cl_action(traj, spec, gamma, kbt),
        None => om_action_general(traj, spec),
    }
}

/// `(1/4γk_BT) Σ (m ẍ + V′ + γẋ)² dt` over interior points.
fn cl_action(traj: &Trajectory, spec: &LangevinSpec, gamma: f64, kbt: f64) -> Result<ActionValue> {
    check_length(traj)?;
    let x = &traj.x;
    let dt = traj.grid.dt();
    let sum: f64 = inertial_residual(traj, spec)
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = i + 1;
            let v = (x[k + 1] - x[k - 1]) / (2.0 * dt);
            (r + gamma * v).powi(2)
        })
        .sum();
    Ok(ActionValue::new(sum * dt / (4.0 * gamma * kbt), 0.0))
}

/// Action through the general kernel machinery, bypassing the
/// Caldeira–Leggett shortcut.
pub fn om_action_general(traj: &Trajectory, spec: &LangevinSpec) -> Result<ActionValue> {
    let n = check_length(traj)?;
    if spec.noise.is_zero() {
        return Err(Error::Kernel("the action needs a nonzero noise kernel".into()));
    }
    let grid = &traj.grid;
    let dt = grid.dt();
    let drive = memory_drive_along(spec, &traj.x, grid)?;
    let mut correction = 0.0;
    let mut rho = inertial_residual(traj, spec);
    for (i, r) in rho.iter_mut().enumerate() {
        let k = i + 1;
        let c = spec.noise_coupling(traj.x[k]);
        if !(c.abs() >= JACOBIAN_THRESHOLD) {
            return Err(Error::SingularJacobian { index: k, value: c.abs() });
        }
        *r = (*r + drive[k]) / c;
        correction -= c.abs().ln();
    }
    let m = spec.noise.discretize_on(grid.time(1), dt, n - 1)?;
    let factor = PsdFactor::new(&m.matrix).map_err(|e| match e {
        Error::NotPositiveSemidefinite { min_eigenvalue } => Error::Kernel(format!(
            "noise kernel is not positive semidefinite (min eigenvalue {min_eigenvalue:e})"
        )),
        e => e,
    })?;
    Ok(ActionValue::new(0.5 * factor.quadratic_form(&rho), correction))
}

/// `exp(total_log_weight(a) − total_log_weight(b))`.
pub fn relative_path_weight(a: &Trajectory, b: &Trajectory, spec: &LangevinSpec) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("paths are defined on different grids".into()));
    }
    let wa = om_action(a, spec)?;
    let wb = om_action(b, spec)?;
    Ok((wa.total_log_weight - wb.total_log_weight).exp())
}
