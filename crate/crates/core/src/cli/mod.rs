//! Command-line front end.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

pub use args::{Cli, Command, EvaluateArgs, FeaturizeArgs, PlotArgs, SynthArgs, TrainArgs};
pub use commands::{run, CliError, RUN_MANIFEST};

/// Parses `argv`, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 on runtime or I/O failure, 2 on invalid usage.
pub fn main_with_args<I, S>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
