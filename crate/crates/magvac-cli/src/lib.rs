//! Command-line front end for the `magvac` library.
//!
//! Exit codes: 0 when the run succeeds and every check passes, 2 when a
//! check fails (the report is still written), 1 for usage, configuration
//! and engineering errors.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Format};
use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    // Numeric options take negative values so the range checks can report them.
    let signed = |a: clap::Arg| if a.get_action().takes_values() { a.allow_negative_numbers(true) } else { a };
    let cmd = Cli::command().mut_args(signed).mut_subcommands(move |c| c.mut_args(signed));
    let cli = match cmd.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_ERROR;
        }
    };
    let report = match commands::dispatch(&cli.command, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", cfg.subcommand);
            return EXIT_ERROR;
        }
    };
    let text = match cfg.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    let written = match &cfg.output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_ERROR;
    }
    if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
