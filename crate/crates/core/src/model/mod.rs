// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Processes, potentials, couplings and kernels, plus their discretization
//! onto time grids.

mod config;
mod coupling;
mod grid;
mod kernel;
mod potential;
mod spec;
mod table;

pub use config::{spec_from_str, ClConfig, CouplingConfig, KernelConfig, SpecConfig};
pub use coupling::CouplingFunction;
pub use grid::TimeGrid;
pub use kernel::{cl_kernels, discretize_kernel, KernelMatrix, KernelSpec, TabulatedKernel};
pub use potential::Potential;
pub use spec::{CouplingConvention, LangevinSpec};
pub use table::Table1d;
