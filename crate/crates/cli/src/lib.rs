//! Command-line harness: dataset manifests, model archives, and the
//! fit/project/classify/eval and synthetic reproduction commands.

pub mod archive;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod models;
pub mod pca;
pub mod repro;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use error::{CliError, CliResult, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses and executes a command line, returning the process exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("usage error");
                    eprintln!("mvcca: {}", one_line(first.trim_start_matches("error: ")));
                    EXIT_USAGE
                }
            };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mvcca: {}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
