//! Library side of the `amnesia` command-line tool.
//!
//! The binary is a thin clap wrapper over [`commands`]; everything it
//! prints or writes is produced here so tests can drive it directly.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod expr;
pub mod report;
pub mod spec;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: malformed spec, unknown parameter, invalid argument.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] spec::SpecError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The run finished early because the solution left the overflow guard.
    #[error("solution overflowed at t = {at:?}; partial output was written")]
    Overflow { at: f64 },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn numerical(e: amnesia_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Spec(_) => 2,
            CliError::Numerical(_) | CliError::Overflow { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}
