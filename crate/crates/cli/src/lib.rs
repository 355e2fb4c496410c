//! Command-line front end and JSON API for the retrieval lab.

pub mod args;
pub mod commands;
pub mod server;

use std::fmt;
use std::process::ExitCode;

pub use args::Cli;
pub use commands::run;

/// Invalid flag combination that clap cannot express; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Status code and `error: <Code>:` line for a failed command.
pub fn describe(err: &anyhow::Error) -> (ExitCode, String) {
    if let Some(u) = err.downcast_ref::<UsageError>() {
        return (ExitCode::from(1), format!("error: Usage: {u}"));
    }
    let code = err
        .chain()
        .find_map(|e| e.downcast_ref::<lirlab::Error>().map(lirlab::Error::code))
        .or_else(|| err.chain().any(|e| e.is::<std::io::Error>()).then_some("Io"))
        .unwrap_or("Internal");
    (ExitCode::from(2), format!("error: {code}: {err:#}"))
}
