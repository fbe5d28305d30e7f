// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Quantum-induced stochastic dynamics.
//!
//! Gaussian influence functionals in the strong-decoherence limit reduce to
//! classical Langevin processes with (possibly colored, possibly
//! multiplicative) noise. This crate simulates those processes, evaluates the
//! Onsager–Machlup weight of their paths, propagates Wigner functions as
//! weighted phase-space ensembles, and maps Langevin specifications back to
//! influence functionals. The [`oracle`] module holds independent reference
//! solvers for the linear Caldeira–Leggett case.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod action;
pub mod dynamics;
pub mod error;
pub mod influence;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod wigner;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
