//! `clam`: train, game, report and gen-data subcommands.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("inequality violated: {0}")]
    Violation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 1,
            Self::Run(_) => 2,
            Self::Violation(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Run(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Run(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "clam", version, about = "Class-dependent multiplicative-weights experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Flat TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds as `0,1,2` or `0..5`; overrides the config.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train every configured method, seed and augmentation setting.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Play the restricted-simplex matrix game and check the regret bound.
    Game(commands::game::GameArgs),
    /// Pair runs with and without augmentation and tabulate the differences.
    Report {
        /// Directories written by `clam train`.
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic dataset as train.csv and test.csv.
    GenData {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    // usage errors count as configuration errors
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Train { common } => commands::train::run(&common),
        Command::Game(args) => commands::game::run(&args),
        Command::Report { run_dirs, common } => commands::report::run(&run_dirs, &common),
        Command::GenData { common } => commands::gen_data::run(&common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clam: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
