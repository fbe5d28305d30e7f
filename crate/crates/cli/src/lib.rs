// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment runner behind the `qisd` binary.
//!
//! Exit codes: 0 success, 1 a `validate` check failed, 2 configuration
//! error, 3 invalid model or parameters, 4 numerical failure, 5 I/O error.

pub mod commands;
pub mod config;
pub mod output;

use std::io;
use std::path::PathBuf;
use std::time::Instant;

use qisd_core::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::output::{append_manifest, hash_outputs, sha256_hex, ManifestRecord, OutputDir};

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Wigner,
    Action,
    Inverse,
    Validate,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Wigner => "wigner",
            Subcommand::Action => "action",
            Subcommand::Inverse => "inverse",
            Subcommand::Validate => "validate",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Core(CoreError),
    Io(io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e.root() {
                CoreError::Config(_) => 2,
                CoreError::InvalidParameter(_)
                | CoreError::OutOfRange { .. }
                | CoreError::GridMismatch(_)
                | CoreError::UnknownState(_)
                | CoreError::CflViolation { .. }
                | CoreError::NotPositiveSemidefinite { .. }
                | CoreError::Kernel(_) => 3,
                _ => 4,
            },
            RunError::Io(_) => 5,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "configuration error: {msg}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Core(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

pub type RunResult<T> = Result<T, RunError>;

#[derive(Debug, Clone)]
pub struct Request {
    pub subcommand: Subcommand,
    pub config_text: String,
    pub config_path: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    /// Failed `validate` checks.
    pub failed_checks: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed_checks > 0 {
            1
        } else {
            0
        }
    }
}

/// Parse, run one subcommand and append its manifest record.
pub fn run(req: &Request) -> RunResult<Outcome> {
    let start = Instant::now();
    let config = ExperimentConfig::parse(&req.config_text).map_err(RunError::Config)?;
    let seed = req
        .seed
        .or(config.seed)
        .ok_or_else(|| RunError::Config("no seed: set `seed` in the config or pass --seed".into()))?;
    let root = req
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut dir = OutputDir::create(&root)?;
    let failed_checks = commands::dispatch(req.subcommand, &config, seed, &mut dir)?;
    let record = ManifestRecord {
        subcommand: req.subcommand.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: qisd_core::VERSION.to_string(),
        seed,
        threads: rayon::current_num_threads(),
        config_path: req.config_path.clone(),
        config_sha256: sha256_hex(req.config_text.as_bytes()),
        config: req.config_text.clone(),
        runtime_seconds: start.elapsed().as_secs_f64(),
        outputs: hash_outputs(&dir)?,
    };
    append_manifest(&root, &record)?;
    Ok(Outcome {
        out_dir: root,
        files: dir.written().to_vec(),
        failed_checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(RunError::Config("x".into()).exit_code(), 2);
        assert_eq!(RunError::Core(CoreError::InvalidParameter("x".into())).exit_code(), 3);
        let nested = CoreError::Trajectory {
            index: 3,
            source: Box::new(CoreError::Divergence { index: 10 }),
        };
        assert_eq!(RunError::Core(nested).exit_code(), 4);
        assert_eq!(RunError::Core(CoreError::EmptyWindow).exit_code(), 4);
        assert_eq!(RunError::Io(io::Error::other("x")).exit_code(), 5);
    }
}
