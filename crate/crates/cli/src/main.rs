//! `sfkrige`: smooth, fit, krige and summarise spatially indexed curves.
//!
//! Every subcommand reads an optional TOML config; flags override it.
//! Exit status is 0 on success, 1 when a pipeline stage fails and 2 for
//! usage or validation problems.

mod args;
mod commands;
mod config;
mod failure;
mod svg;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::failure::UsageError;

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("\nFor more information, try '--help'.");
                2
            } else {
                1
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(run_cli(std::env::args_os()))
}
