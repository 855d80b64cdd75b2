//! `sqpc`: command-line front end for the semi-quantum private comparison
//! simulator.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error,
//! 3 internal invariant breach.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::CommonFlags;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sqpc",
    version,
    about = "Semi-quantum private comparison simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exhaustively check the entanglement-swapping identity and Born-rule properties.
    VerifySwap {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Run the protocol once on two secrets and print the verdict.
    Run {
        #[command(flatten)]
        flags: CommonFlags,
        /// Round budget (default 256 per secret bit).
        #[arg(long)]
        max_rounds: Option<u64>,
    },
    /// Monte Carlo trials plus the exact oracle for one adversary strategy.
    Attack {
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Merge attack reports and write survival curves.
    Report {
        #[command(flatten)]
        flags: CommonFlags,
        /// Attack report JSON files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Last round count of the survival curves.
        #[arg(long, default_value_t = 16)]
        horizon: u64,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::VerifySwap { flags } => commands::verify_swap(&flags),
        Command::Run { flags, max_rounds } => commands::run(&flags, max_rounds),
        Command::Attack { flags } => commands::attack(&flags),
        Command::Report {
            flags,
            inputs,
            horizon,
        } => commands::report(&flags, &inputs, horizon),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = std::panic::catch_unwind(|| dispatch(cli))
        .unwrap_or_else(|_| Err(CliError::Internal("panic during execution".into())));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
