//! Command-line surface tying the pipeline together.
//!
//! The `stemsim` binary is a thin wrapper over [`run_from`]; every
//! subcommand is also callable in-process, which is how the integration
//! tests drive it. Exit codes: 0 success, 1 runtime or data error, 2 usage
//! or configuration error.

mod args;
pub mod commands;
mod config;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use config::{EvalOptions, RunConfig};

use crate::error::Result;

/// Dispatches a parsed command.
pub fn run_command(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => commands::cmd_synth(a),
        Command::Featurize(a) => commands::cmd_featurize(a),
        Command::Train(a) => commands::cmd_train(a),
        Command::Eval(a) => commands::cmd_eval(a),
        Command::Distmat(a) => commands::cmd_distmat(a),
        Command::Correlate(a) => commands::cmd_correlate(a),
        Command::Query(a) => commands::cmd_query(a),
        Command::ListeningSets(a) => commands::cmd_listening_sets(a),
        Command::Sdr(a) => commands::cmd_sdr(a),
    }
}

/// Parses and runs, returning the process exit code. Usage errors exit 2,
/// runtime and data errors exit 1.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports 0 for --help/--version, 2 for usage errors.
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
