//! Command-line front end: flag parsing, JSON run configs, CSV/SVG output
//! and the acceptance battery.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod suite;
pub mod svg;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{execute, Outcome};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use svg::{emit_svg, render_svg, Series};

/// Parse `argv`, run, print, and return the process exit code: 0 on
/// success or PASS, 1 on FAIL verdicts and numerical failures, 2 on usage
/// and config errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let dump = cli.dump_config;
    let result = cli.into_config().and_then(|cfg| {
        if dump {
            println!("{}", cfg.to_json());
            return Ok(0);
        }
        let outcome = execute(&cfg)?;
        if cfg.json {
            println!("{}", serde_json::to_string_pretty(&outcome.json).expect("json value"));
        } else {
            println!("{}", outcome.text);
        }
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
