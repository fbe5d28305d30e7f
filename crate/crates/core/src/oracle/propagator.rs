// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact conditional density of the discretized Brownian-oscillator action.
//!
//! With residual rows `R_k x = m(x_{k+1} − 2x_k + x_{k−1})/dt² + mω²x_k +
//! γ(x_{k+1} − x_{k−1})/2dt` for `k = 1..n−1`, the path density is
//! `exp(−dt/(4γk_BT) Σ (R_k x)²)`. Once the first pair `(x₀, x₁)` is fixed,
//! `R` restricted to `x₂..x_n` is square lower-triangular, so `ξ = R x` is a
//! change of variables with constant Jacobian and the `ξ_k` are independent
//! `N(0, 2γk_BT/dt)`. Forward substitution is the pair recursion
//! `z_{k+1} = F z_k + g ξ_k` on `z_k = (x_{k−1}, x_k)`, giving the last pair as
//! `Φ z₁ + Σ G_k ξ_k`. Working with the triangular factor avoids the normal
//! matrix `RᵀR`, whose condition number grows like `n⁴`.
//!
//! A pair maps to a phase-space state at its midpoint time:
//! `x̄ = (x_a + x_b)/2`, `p = m(x_b − x_a)/dt`, so the propagator spans `τ − dt`.

use nalgebra::{Matrix2, Vector2};

use super::GaussianState;
use crate::error::{Error, Result};
use crate::model::TimeGrid;

fn to_array(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn to_matrix(a: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])
}

/// `(x_a, x_b)` to `(x̄, p)`.
pub fn pair_to_state(pair: [f64; 2], mass: f64, dt: f64) -> [f64; 2] {
    [0.5 * (pair[0] + pair[1]), mass * (pair[1] - pair[0]) / dt]
}

/// `(x̄, p)` to `(x_a, x_b)`.
pub fn state_to_pair(state: [f64; 2], mass: f64, dt: f64) -> [f64; 2] {
    let half = 0.5 * state[1] * dt / mass;
    [state[0] - half, state[0] + half]
}

#[derive(Debug, Clone)]
pub struct GaussianPropagator {
    mass: f64,
    dt: f64,
    n: usize,
    /// Variance of each `ξ_k`, `2γk_BT/dt`.
    xi_variance: f64,
    transition: Matrix2<f64>,
    input: Vector2<f64>,
    /// `Φ = F^{n−1}`.
    pair_map: Matrix2<f64>,
    /// `G_k = F^{n−1−k} g` for `k = 1..n−1`.
    responses: Vec<Vector2<f64>>,
    /// `Σ G_k G_kᵀ`.
    gram: Matrix2<f64>,
    gram_inv: Matrix2<f64>,
}

/// Build the propagator for `m ẍ + γẋ + mω²x = η` on `grid` (at least 4 steps).
pub fn gaussian_path_propagator(m: f64, omega: f64, gamma: f64, kbt: f64, grid: &TimeGrid) -> Result<GaussianPropagator> {
    if !(m > 0.0 && omega >= 0.0 && gamma >= 0.0 && kbt >= 0.0) {
        return Err(Error::invalid("propagator needs m > 0 and non-negative ω, γ, kBT"));
    }
    let n = grid.n_steps();
    if n < 4 {
        return Err(Error::Conditioning("the quadratic form needs at least 4 steps".into()));
    }
    let dt = grid.dt();
    let c0 = m / (dt * dt) - gamma / (2.0 * dt);
    let c1 = -2.0 * m / (dt * dt) + m * omega * omega;
    let c2 = m / (dt * dt) + gamma / (2.0 * dt);
    let transition = Matrix2::new(0.0, 1.0, -c0 / c2, -c1 / c2);
    let input = Vector2::new(0.0, 1.0 / c2);

    let mut power = Matrix2::identity();
    let mut responses = vec![Vector2::zeros(); n - 1];
    let mut gram = Matrix2::zeros();
    for k in (1..n).rev() {
        let gk = power * input;
        gram += gk * gk.transpose();
        responses[k - 1] = gk;
        power *= transition;
    }
    let gram_inv = gram
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Conditioning("end-pair response is singular".into()))?;
    Ok(GaussianPropagator {
        mass: m,
        dt,
        n,
        xi_variance: 2.0 * gamma * kbt / dt,
        transition,
        input,
        pair_map: power,
        responses,
        gram,
        gram_inv,
    })
}

impl GaussianPropagator {
    /// Time between the first and last pair midpoints, `τ − dt`.
    pub fn elapsed(&self) -> f64 {
        (self.n - 1) as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Conditional mean of the last pair.
    pub fn pair_mean(&self, start: [f64; 2]) -> [f64; 2] {
        let e = self.pair_map * Vector2::from(start);
        [e[0], e[1]]
    }

    pub fn pair_covariance(&self) -> [[f64; 2]; 2] {
        to_array(&(self.gram * self.xi_variance))
    }

    fn transform(&self) -> Matrix2<f64> {
        Matrix2::new(0.5, 0.5, -self.mass / self.dt, self.mass / self.dt)
    }

    /// Mean map `Φ` in `(x̄, p)` coordinates.
    pub fn mean_map(&self) -> [[f64; 2]; 2] {
        let t = self.transform();
        to_array(&(t * self.pair_map * t.try_inverse().unwrap()))
    }

    /// Covariance of the final state for a sharp initial state.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let t = self.transform();
        to_array(&(t * to_matrix(&self.pair_covariance()) * t.transpose()))
    }

    /// Push a Gaussian state through: `(Φμ, ΦΣΦᵀ + C)`.
    pub fn evolve(&self, state: &GaussianState) -> GaussianState {
        let phi = to_matrix(&self.mean_map());
        let mean = phi * Vector2::from(state.mean);
        let cov = phi * to_matrix(&state.cov) * phi.transpose() + to_matrix(&self.covariance());
        GaussianState {
            mean: [mean[0], mean[1]],
            cov: to_array(&cov),
        }
    }

    /// `log P(end_a | start) − log P(end_b | start)` in pair coordinates.
    pub fn log_density_ratio(&self, start: [f64; 2], end_a: [f64; 2], end_b: [f64; 2]) -> Result<f64> {
        if !(self.xi_variance > 0.0) {
            return Err(Error::Conditioning("no density without noise".into()));
        }
        let mu = Vector2::from(self.pair_mean(start));
        let quad = |e: [f64; 2]| {
            let d = Vector2::from(e) - mu;
            d.dot(&(self.gram_inv * d))
        };
        Ok(-(quad(end_a) - quad(end_b)) / (2.0 * self.xi_variance))
    }

    /// Path of least action through the given first and last pairs: the
    /// minimum-norm residuals `ξ_k = G_kᵀ W⁻¹ (end − Φ start)` run through
    /// the recursion.
    pub fn minimizing_path(&self, start: [f64; 2], end: [f64; 2]) -> Vec<f64> {
        let gap = Vector2::from(end) - self.pair_map * Vector2::from(start);
        let lagrange = self.gram_inv * gap;
        let mut z = Vector2::from(start);
        let mut x = Vec::with_capacity(self.n + 1);
        x.extend_from_slice(&start);
        for g in &self.responses {
            z = self.transition * z + self.input * g.dot(&lagrange);
            x.push(z[1]);
        }
        x
    }
}
