// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition of `[t_start, t_end]` into `n_steps` slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    dt: f64,
}

impl TimeGrid {
    /// Grid on `[0, t_end]` with `n_steps` slices.
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        Self::spanning(0.0, t_end, n_steps)
    }

    pub fn spanning(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::invalid(format!(
                "time grid bounds [{t_start}, {t_end}] are not increasing"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
            dt: (t_end - t_start) / n_steps as f64,
        })
    }

    /// Grid on `[0, t_end]` whose step is the largest value `<= max_dt`
    /// dividing the interval evenly.
    pub fn with_max_step(t_end: f64, max_dt: f64) -> Result<Self> {
        if !(max_dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {max_dt}")));
        }
        // Tolerate representation error so that e.g. 1.0 / 1e-3 gives 1000 steps.
        let n = (t_end / max_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new(t_end, n)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of time stamps, both endpoints included.
    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}
