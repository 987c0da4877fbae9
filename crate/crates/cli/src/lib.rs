//! Front end for `teleportsim`: config-driven single runs, parameter sweeps
//! written as CSV, and a `(τ, ν)` channel inspector.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Axis, Mode, Phi, RunConfig, SweepSpec};
pub use error::CliError;
pub use run::{channel_map, evaluate, simulate, sweep, Row, CSV_HEADER};

/// Environment variable capping Monte Carlo worker threads.
pub const THREADS_ENV: &str = "TELEPORTSIM_THREADS";

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} = `{s}` is not a positive integer"
            ))),
        },
    }
}

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
