// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the simulation, action and oracle routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {time} lies outside the tabulated range [{start}, {end}]")]
    OutOfRange { time: f64, start: f64, end: f64 },

    #[error("kernel is not positive semidefinite (most negative eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("kernel error: {0}")]
    Kernel(String),

    #[error("singular Jacobian: |coupling| = {value:e} below threshold at step {index}")]
    SingularJacobian { index: usize, value: f64 },

    #[error("integration diverged at step {index}")]
    Divergence { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown state kind `{0}`")]
    UnknownState(String),

    #[error("histogram window contains no samples")]
    EmptyWindow,

    #[error("time step {dt:e} violates the CFL limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("ill-conditioned quadratic form: {0}")]
    Conditioning(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Innermost error, unwrapping per-trajectory context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Trajectory { source, .. } => source.root(),
            other => other,
        }
    }
}
