//! `spectral-search`: run hyperparameter and architecture searches, recovery
//! experiments and one-shot sparse regressions from a TOML configuration.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "spectral-search", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hyperparameter search with PGSR-HB or plain Hyperband.
    Hpo {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides `run.mode`.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Multi-stage cell-architecture search.
    Nas {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Planted-recovery success rate over a grid of measurement counts.
    Phase {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Encoder stability across regularization strengths.
    Lambda {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Lasso or Group Lasso on a matrix dump and observation vector.
    Recover {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `run.workers`.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; must not exist yet. Overrides `run.out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hyperband,
    Pgsr,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Hpo { common, mode } => commands::hpo(&common, mode),
        Command::Nas { common } => commands::nas(&common),
        Command::Phase { common } => commands::phase(&common),
        Command::Lambda { common } => commands::lambda(&common),
        Command::Recover { common } => commands::recover(&common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPECTRAL_SEARCH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
