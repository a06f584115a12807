//! Command-line front end: `synth`, `fit`, `train`, `dewarp`, `eval` and
//! `gradcheck`, with versioned on-disk formats.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or tolerance failure,
//! 3 I/O error.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod sample;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Fit(a) => commands::fit(a),
        Command::Train(a) => commands::train(a),
        Command::Dewarp(a) => commands::dewarp(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
