//! Command-line front end for `fblmimo-core`.
//!
//! Scalar subcommands print one `key=value` line on standard output. Sweeps
//! write CSV. Exit codes: 0 on success, 2 when an argument is outside the
//! domain or a closed form is not valid for it, 1 for internal failures.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub mod args;
mod commands;
pub mod output;
pub mod sweep;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] fblmimo_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use fblmimo_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Domain(_) | E::Validity(_) | E::InfeasibleRate { .. }) => 2,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let line = match command {
        Command::QInv(a) => commands::q_inv(&a)?,
        Command::Dispersion(a) => commands::dispersion(&a, err)?,
        Command::Rate(a) => commands::rate(&a, err)?,
        Command::Blocklength(a) => commands::blocklength(&a)?,
        Command::Mc(a) => commands::mc(&a, err)?,
        Command::Sweep(a) => return sweep::run(&a, out, err),
    };
    writeln!(out, "{line}").map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}
