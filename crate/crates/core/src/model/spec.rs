// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::coupling::CouplingFunction;
use super::kernel::{cl_kernels, KernelSpec};
use super::potential::Potential;
use crate::error::{Error, Result};

/// Which reading of the coupling functions drives the equation of motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingConvention {
    /// Strong-decoherence form: noise enters as `f′(x)·η`, the memory drive
    /// as `f′(x_t) ∫ D(t,s) f(x_s) ds`.
    #[default]
    Qisd,
    /// Classical Langevin form: noise enters as `f(x)·ξ`, the memory drive as
    /// `∫ g(x_s) D(t,s) ds`.
    Langevin,
}

/// A classical process `m ẍ + V′(x) + drive = c(x)·η` with `⟨ηη⟩ = N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinSpec {
    pub mass: f64,
    pub potential: Potential,
    /// Noise coupling.
    pub f: CouplingFunction,
    /// Dissipation coupling (Langevin convention only).
    pub g: CouplingFunction,
    pub dissipation: KernelSpec,
    pub noise: KernelSpec,
    pub convention: CouplingConvention,
    pub hbar: f64,
}

impl LangevinSpec {
    pub fn new(
        mass: f64,
        potential: Potential,
        f: CouplingFunction,
        g: CouplingFunction,
        dissipation: KernelSpec,
        noise: KernelSpec,
        convention: CouplingConvention,
    ) -> Result<Self> {
        let spec = Self {
            mass,
            potential,
            f,
            g,
            dissipation,
            noise,
            convention,
            hbar: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Linear coupling to a high-temperature oscillator bath.
    pub fn caldeira_leggett(mass: f64, potential: Potential, gamma: f64, kbt: f64) -> Result<Self> {
        let (d, n) = cl_kernels(gamma, kbt)?;
        Self::new(
            mass,
            potential,
            CouplingFunction::Linear,
            CouplingFunction::Linear,
            d,
            n,
            CouplingConvention::Qisd,
        )
    }

    /// Closed system: no dissipation, no noise.
    pub fn closed(mass: f64, potential: Potential) -> Result<Self> {
        Self::new(
            mass,
            potential,
            CouplingFunction::Linear,
            CouplingFunction::Linear,
            KernelSpec::zero(),
            KernelSpec::zero(),
            CouplingConvention::Qisd,
        )
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    pub fn with_convention(mut self, convention: CouplingConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        self.potential.validate()?;
        self.f.validate()?;
        self.g.validate()?;
        self.dissipation.validate()?;
        self.noise.validate()?;
        if !self.noise.is_symmetric() {
            return Err(Error::invalid("noise kernel must be symmetric"));
        }
        Ok(())
    }

    /// Multiplier of the noise in the equation of motion (`f′` or `f`).
    #[inline]
    pub fn noise_coupling(&self, x: f64) -> f64 {
        match self.convention {
            CouplingConvention::Qisd => self.f.derivative(x),
            CouplingConvention::Langevin => self.f.value(x),
        }
    }

    /// The memory drive is `prefactor(x_t) · ∫ D(t,s) source(x_s) ds`.
    #[inline]
    pub fn drive_prefactor(&self, x: f64) -> f64 {
        match self.convention {
            CouplingConvention::Qisd => self.f.derivative(x),
            CouplingConvention::Langevin => 1.0,
        }
    }

    #[inline]
    pub fn drive_source(&self, x: f64) -> f64 {
        match self.convention {
            CouplingConvention::Qisd => self.f.value(x),
            CouplingConvention::Langevin => self.g.value(x),
        }
    }

    #[inline]
    pub fn drive_source_derivative(&self, x: f64) -> f64 {
        match self.convention {
            CouplingConvention::Qisd => self.f.derivative(x),
            CouplingConvention::Langevin => self.g.derivative(x),
        }
    }

    /// Memory drive of a local (delta-type) dissipation kernel at `(x, v)`;
    /// `None` when the kernel needs the path history.
    #[inline]
    pub fn local_drive(&self, x: f64, v: f64) -> Option<f64> {
        match self.dissipation {
            KernelSpec::Delta { amplitude } => {
                Some(amplitude * self.drive_prefactor(x) * self.drive_source(x))
            }
            KernelSpec::DeltaDerivative { amplitude } => Some(
                amplitude * self.drive_prefactor(x) * self.drive_source_derivative(x) * v,
            ),
            _ => None,
        }
    }

    /// `(γ, k_BT)` when the process is exactly Caldeira–Leggett Brownian
    /// motion: white noise, local friction `γẋ`, unit noise coupling.
    pub fn cl_parameters(&self) -> Option<(f64, f64)> {
        let (KernelSpec::DeltaDerivative { amplitude: gamma }, KernelSpec::Delta { amplitude: a }) =
            (&self.dissipation, &self.noise)
        else {
            return None;
        };
        let unit = CouplingFunction::Constant { value: 1.0 };
        let linear = match self.convention {
            CouplingConvention::Qisd => self.f.same_as(&CouplingFunction::Linear),
            CouplingConvention::Langevin => {
                self.f.same_as(&unit) && self.g.same_as(&CouplingFunction::Linear)
            }
        };
        (linear && *gamma > 0.0).then(|| (*gamma, a / (2.0 * gamma)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cl_spec_drive_reduces_to_friction() {
        let spec = LangevinSpec::caldeira_leggett(1.0, Potential::harmonic(1.0, 1.0), 0.5, 2.0).unwrap();
        assert_eq!(spec.local_drive(3.0, 2.0), Some(1.0));
        assert_eq!(spec.noise_coupling(-7.0), 1.0);
        assert_eq!(spec.cl_parameters(), Some((0.5, 2.0)));
    }

    #[test]
    fn langevin_reading_of_cl() {
        let mut spec = LangevinSpec::caldeira_leggett(1.0, Potential::Free, 0.5, 2.0).unwrap();
        spec.convention = CouplingConvention::Langevin;
        spec.f = CouplingFunction::Constant { value: 1.0 };
        assert_eq!(spec.local_drive(3.0, 2.0), Some(1.0));
        assert_eq!(spec.noise_coupling(-7.0), 1.0);
        assert_eq!(spec.cl_parameters(), Some((0.5, 2.0)));
    }

    #[test]
    fn rejects_bad_mass_and_asymmetric_noise() {
        assert!(LangevinSpec::closed(0.0, Potential::Free).is_err());
        let spec = LangevinSpec::new(
            1.0,
            Potential::Free,
            CouplingFunction::Linear,
            CouplingFunction::Linear,
            KernelSpec::zero(),
            KernelSpec::DeltaDerivative { amplitude: 1.0 },
            CouplingConvention::Qisd,
        );
        assert!(spec.is_err());
    }
}
