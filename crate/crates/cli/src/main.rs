// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use qisd_cli::{run, Request, Subcommand};

#[derive(Parser)]
#[command(name = "qisd", version, about = "Quantum-induced stochastic dynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Langevin ensemble statistics.
    Simulate(Common),
    /// Wigner-function propagation through the Langevin dynamics.
    Wigner(Common),
    /// Onsager-Machlup action of every ensemble path.
    Action(Common),
    /// Influence functional and decoherence table for the model.
    Inverse(Common),
    /// Cross-check the reference solvers on a linear model.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (subcommand, common) = match cli.command {
        Command::Simulate(c) => (Subcommand::Simulate, c),
        Command::Wigner(c) => (Subcommand::Wigner, c),
        Command::Action(c) => (Subcommand::Action, c),
        Command::Inverse(c) => (Subcommand::Inverse, c),
        Command::Validate(c) => (Subcommand::Validate, c),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    let config_text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(5);
        }
    };
    let req = Request {
        subcommand,
        config_text,
        config_path: Some(common.config.display().to_string()),
        seed: common.seed,
        out: common.out,
    };
    match run(&req) {
        Ok(outcome) => {
            println!("wrote {} files to {}", outcome.files.len(), outcome.out_dir.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
