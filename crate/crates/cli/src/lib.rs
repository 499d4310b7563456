//! The `lenma` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on I/O
//! errors. Problems with individual log lines never change the exit code.

pub mod args;
mod commands;

use std::ffi::OsString;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::Parser;

pub use commands::{cmd_analyze, cmd_bench, cmd_export, cmd_mine, CliError};

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Parses `args` (including the program name) and runs the subcommand.
/// `stop` ends follow-mode and listening inputs when raised.
pub fn run<I, T>(args: I, stop: &Arc<AtomicBool>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(&a, stop),
        Command::Resume(a) => commands::cmd_resume(a, stop),
        Command::Export(a) => cmd_export(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("lenma: {e:#}");
            e.exit_code()
        }
    }
}
