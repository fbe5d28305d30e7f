// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the RK4 step of [`moment_ode_evolve`].
pub const MAX_ODE_STEP: f64 = 1e-4;

/// Mean and covariance of `(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = cov;
        let scale = a.abs().max(d.abs()).max(1e-300);
        if !(mean.iter().chain(&[a, b, c, d]).all(|v| v.is_finite())) {
            return Err(Error::invalid("Gaussian state must be finite"));
        }
        if a < 0.0 || d < 0.0 || (b - c).abs() > 1e-12 * scale || a * d - b * c < -1e-12 * scale * scale {
            return Err(Error::invalid("covariance must be symmetric PSD"));
        }
        Ok(Self { mean, cov })
    }

    pub fn point(x: f64, p: f64) -> Self {
        Self {
            mean: [x, p],
            cov: [[0.0; 2]; 2],
        }
    }

    /// `[mean_x, mean_p, var_x, var_p, cov_xp]`.
    pub fn as_array(&self) -> [f64; 5] {
        [self.mean[0], self.mean[1], self.cov[0][0], self.cov[1][1], self.cov[0][1]]
    }
}

/// `(ṁ, Σ̇)` for drift `A = [[0, 1/m], [−mω², −γ/m]]` and diffusion `2γk_BT` in p.
fn rhs(a: &[[f64; 2]; 2], q: f64, mean: &[f64; 2], cov: &[[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let dm = [
        a[0][0] * mean[0] + a[0][1] * mean[1],
        a[1][0] * mean[0] + a[1][1] * mean[1],
    ];
    let mut ac = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ac[i][j] = a[i][0] * cov[0][j] + a[i][1] * cov[1][j];
        }
    }
    let mut dc = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            dc[i][j] = ac[i][j] + ac[j][i];
        }
    }
    dc[1][1] += q;
    (dm, dc)
}

fn axpy(state: &([f64; 2], [[f64; 2]; 2]), h: f64, k: &([f64; 2], [[f64; 2]; 2])) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut out = *state;
    for i in 0..2 {
        out.0[i] += h * k.0[i];
        for j in 0..2 {
            out.1[i][j] += h * k.1[i][j];
        }
    }
    out
}

/// Mean and covariance after `tau` under `m ẍ + γẋ + mω²x = η`,
/// `⟨η(t)η(s)⟩ = 2γk_BT δ(t−s)`, by classical RK4 with step at most
/// [`MAX_ODE_STEP`].
pub fn moment_ode_evolve(
    m: f64,
    omega: f64,
    gamma: f64,
    kbt: f64,
    state: &GaussianState,
    tau: f64,
) -> Result<GaussianState> {
    if !(m > 0.0 && omega >= 0.0 && gamma >= 0.0 && kbt >= 0.0 && tau >= 0.0) {
        return Err(Error::invalid("moment ODE needs m > 0 and non-negative ω, γ, kBT, τ"));
    }
    let a = [[0.0, 1.0 / m], [-m * omega * omega, -gamma / m]];
    let q = 2.0 * gamma * kbt;
    let steps = (tau / MAX_ODE_STEP).ceil().max(1.0) as usize;
    let h = tau / steps as f64;
    let mut y = (state.mean, state.cov);
    for _ in 0..steps {
        let k1 = rhs(&a, q, &y.0, &y.1);
        let y2 = axpy(&y, 0.5 * h, &k1);
        let k2 = rhs(&a, q, &y2.0, &y2.1);
        let y3 = axpy(&y, 0.5 * h, &k2);
        let k3 = rhs(&a, q, &y3.0, &y3.1);
        let y4 = axpy(&y, h, &k3);
        let k4 = rhs(&a, q, &y4.0, &y4.1);
        for i in 0..2 {
            y.0[i] += h / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
            for j in 0..2 {
                y.1[i][j] += h / 6.0 * (k1.1[i][j] + 2.0 * k2.1[i][j] + 2.0 * k3.1[i][j] + k4.1[i][j]);
            }
        }
    }
    Ok(GaussianState { mean: y.0, cov: y.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_rotation_is_periodic() {
        let s0 = GaussianState::new([1.0, 0.0], [[0.5, 0.1], [0.1, 0.5]]).unwrap();
        let quarter = moment_ode_evolve(1.0, 1.0, 0.0, 3.0, &s0, PI / 2.0).unwrap();
        assert!((quarter.mean[0]).abs() < 1e-12 && (quarter.mean[1] + 1.0).abs() < 1e-12);
        let full = moment_ode_evolve(1.0, 1.0, 0.0, 3.0, &s0, 2.0 * PI).unwrap();
        for (a, b) in full.as_array().iter().zip(s0.as_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxes_to_equipartition() {
        let s0 = GaussianState::point(3.0, -1.0);
        let s = moment_ode_evolve(2.0, 1.5, 1.0, 0.7, &s0, 150.0).unwrap();
        let [mx, mp, vx, vp, c] = s.as_array();
        assert!(mx.abs() < 1e-8 && mp.abs() < 1e-8 && c.abs() < 1e-8);
        assert!((vx - 0.7 / (2.0 * 1.5 * 1.5)).abs() < 1e-8);
        assert!((vp - 2.0 * 0.7).abs() < 1e-8);
    }

    #[test]
    fn free_diffusion_closed_form() {
        // ω = 0: ⟨p²⟩ = m k_BT (1 − e^{−2γt/m}) from p(0) = 0.
        let s = moment_ode_evolve(1.0, 0.0, 0.5, 2.0, &GaussianState::point(0.0, 0.0), 3.0).unwrap();
        assert!((s.cov[1][1] - 2.0 * (1.0 - (-3.0f64).exp())).abs() < 1e-10);
    }
}
