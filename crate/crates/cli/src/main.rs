//! `moran`: dimension estimates for Moran and Cantor-like sets from JSON spec files.
//!
//! Exit status: 0 success, 1 I/O, 2 usage, 3 parse, 4 validation, 5 budget,
//! 6 computation.

mod args;
mod commands;
mod error;
mod report;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
