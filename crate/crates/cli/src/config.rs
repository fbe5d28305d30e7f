// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration.
//!
//! One TOML file drives every subcommand. `[model]` is the Langevin
//! specification; the other sections are read only by the subcommands that
//! need them. Unknown keys are rejected everywhere.
//!
//! ```toml
//! seed = 20260101
//!
//! [model]
//! mass = 1.0
//! potential = { kind = "harmonic", stiffness = 1.0 }
//! caldeira_leggett = { gamma = 0.5, kbt = 2.0 }
//!
//! [grid]
//! tau = 10.0
//! dt = 1e-3
//!
//! [ensemble]
//! n_traj = 1000
//! record_every = 100
//! initial = { kind = "point", x0 = 1.0, v0 = 0.0 }
//! ```

use std::path::PathBuf;

use qisd_core::dynamics::{FailurePolicy, InitialDistribution, IntegratorOptions};
use qisd_core::influence::DissipationPlacement;
use qisd_core::model::{CouplingConvention, SpecConfig};
use qisd_core::wigner::{PhaseWindow, StateSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed. Required here or on the command line.
    pub seed: Option<u64>,
    pub model: SpecConfig,
    pub grid: Option<GridConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub wigner: Option<WignerConfig>,
    pub inverse: Option<InverseConfig>,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Simulation span `[0, tau]` with steps no longer than `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub tau: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    pub initial: InitialDistribution,
    #[serde(default)]
    pub on_failure: FailurePolicy,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    /// Also write every recorded trajectory point (`simulate` only).
    #[serde(default)]
    pub write_trajectories: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    pub state: StateSpec,
    pub n_points: usize,
    /// Snapshot times, increasing. `0` is the initial ensemble.
    pub times: Vec<f64>,
    /// Largest integration step between snapshots.
    pub dt: f64,
    pub window: PhaseWindow,
}

/// Decoherence table over constant separations `y₀` held for times `τ`
/// along the constant path `x ≡ x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    #[serde(default = "unit")]
    pub x0: f64,
    pub y0: Vec<f64>,
    pub tau: Vec<f64>,
    pub dt: f64,
    #[serde(default)]
    pub placement: DissipationPlacement,
    /// Express the functional in this convention; the model's by default.
    #[serde(default)]
    pub convention: Option<CouplingConvention>,
}

fn unit() -> f64 {
    1.0
}

/// Settings for the oracle cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub tau: f64,
    pub dt: f64,
    /// Phase-space cell size of the grid solver.
    pub cell: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            dt: 1e-3,
            cell: 0.1,
            mean: [1.0, 0.5],
            cov: [[0.5, 0.0], [0.0, 0.5]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    pub dir: Option<PathBuf>,
    /// Write JSON plot descriptions next to the data.
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, plots: true }
    }
}

impl ExperimentConfig {
    /// Parse TOML; errors carry the line, column and offending key.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
    }
}
