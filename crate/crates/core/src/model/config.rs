// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Text configuration for [`LangevinSpec`].
//!
//! The format is TOML with dotted keys:
//!
//! ```toml
//! mass = 1.0
//! hbar = 1.0                 # optional, default 1
//! convention = "qisd"        # or "langevin"
//! potential.kind = "harmonic"
//! potential.stiffness = 1.0
//! coupling.f.kind = "linear"
//! coupling.g.kind = "linear" # optional, default linear
//! kernel.D.kind = "delta_derivative"
//! kernel.D.amplitude = 0.5
//! kernel.N.kind = "delta"
//! kernel.N.amplitude = 2.0
//! ```
//!
//! Instead of `kernel.*`, a `caldeira_leggett.gamma` / `caldeira_leggett.kbt`
//! pair selects the high-temperature Caldeira–Leggett kernels.

use serde::{Deserialize, Serialize};

use super::coupling::CouplingFunction;
use super::kernel::{cl_kernels, KernelSpec};
use super::potential::Potential;
use super::spec::{CouplingConvention, LangevinSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub mass: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub convention: CouplingConvention,
    pub potential: Potential,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub caldeira_leggett: Option<ClConfig>,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default = "linear")]
    pub f: CouplingFunction,
    #[serde(default = "linear")]
    pub g: CouplingFunction,
}

fn linear() -> CouplingFunction {
    CouplingFunction::Linear
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            f: linear(),
            g: linear(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(rename = "D", default = "KernelSpec::zero")]
    pub dissipation: KernelSpec,
    #[serde(rename = "N", default = "KernelSpec::zero")]
    pub noise: KernelSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClConfig {
    pub gamma: f64,
    pub kbt: f64,
}

impl SpecConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<LangevinSpec> {
        let (dissipation, noise) = match (&self.kernel, &self.caldeira_leggett) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "`kernel` and `caldeira_leggett` are mutually exclusive".into(),
                ))
            }
            (Some(k), None) => (k.dissipation.clone(), k.noise.clone()),
            (None, Some(cl)) => cl_kernels(cl.gamma, cl.kbt)?,
            (None, None) => (KernelSpec::zero(), KernelSpec::zero()),
        };
        LangevinSpec::new(
            self.mass,
            self.potential.clone(),
            self.coupling.f.clone(),
            self.coupling.g.clone(),
            dissipation,
            noise,
            self.convention,
        )?
        .with_hbar(self.hbar)
    }
}

/// Parse and validate a spec from its text configuration.
pub fn spec_from_str(text: &str) -> Result<LangevinSpec> {
    SpecConfig::parse(text)?.build()
}
