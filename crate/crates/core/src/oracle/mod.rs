// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reference solvers for Brownian motion in a harmonic well.
//!
//! Three independent routes to the same Gaussian evolution: the linear moment
//! equations, the exact conditional density of the discretized quadratic
//! action, and a finite-volume Kramers equation solver. They share no code
//! with the Monte Carlo pipeline beyond the parameter types.

mod kramers;
mod moments;
mod propagator;

pub use kramers::{kramers_grid_series, kramers_grid_solve, KramersSolution, LEAKAGE_WARNING};
pub use moments::{moment_ode_evolve, GaussianState, MAX_ODE_STEP};
pub use propagator::{gaussian_path_propagator, pair_to_state, state_to_pair, GaussianPropagator};

/// Relative Frobenius distance `‖a − b‖ / ‖b‖` of 2×2 matrices.
pub fn relative_frobenius(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            num += (a[i][j] - b[i][j]).powi(2);
            den += b[i][j].powi(2);
        }
    }
    (num / den).sqrt()
}
