//! Command-line front end for the `nashseek` library: simulate
//! equilibrium-seeking runs from config files, compare the
//! vanishing-amplitude scheme against the fixed-amplitude baseline, verify
//! candidate equilibria, check probing-frequency conditions, and audit the
//! probing-signal moment averages.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use clap::Parser;

/// Parses the process arguments and runs the selected command, returning
/// the process exit code.
pub fn run() -> i32 {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version exit 0; usage errors exit 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    commands::dispatch(cli)
}
