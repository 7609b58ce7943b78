use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cltlab::runner;

/// Deterministic Monte Carlo workbench for normal-approximation rates of
/// weakly dependent stationary processes.
#[derive(Parser)]
#[command(name = "cltlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to the `key = value` config file.
        config: PathBuf,
        /// Output directory for the report bundle.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (affects wall time only, never results).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a config file without running anything.
    Validate { config: PathBuf },
    /// Run the built-in exact-oracle regression check.
    OracleCheck {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the artifact version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, workers, seed } => {
            runner::cli_run(&config, &out, workers, seed)
        }
        Command::Validate { config } => runner::cli_validate(&config),
        Command::OracleCheck { out } => runner::cli_oracle_check(&out),
        Command::Version => {
            println!("cltlab {}", env!("CARGO_PKG_VERSION"));
            0
        }
    };
    ExitCode::from(code)
}
