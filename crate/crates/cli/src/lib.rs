//! Command-line driver: theory curves, simulation campaigns, comparisons,
//! critical sets and the acceptance self-test.

pub mod args;
pub mod commands;
pub mod io;

use std::fmt;

pub use args::Cli;
pub use commands::run;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// A flag is missing, malformed or inconsistent with the others.
    Config { flag: String, message: String },
    /// An input file is unreadable.
    Io(String),
    /// An input file does not parse.
    Format(String),
    /// The solver, the continuation or the eigensolver failed.
    Numerical(String),
}

impl CliError {
    pub fn config(flag: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            flag: flag.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { flag, message } => write!(f, "invalid {flag}: {message}"),
            CliError::Io(m) | CliError::Format(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn flag_of(name: &str) -> Option<&'static str> {
    Some(match name {
        "alpha" => "--alpha",
        "gamma" => "--gamma",
        "eps_floor" => "--eps-floor",
        "points" => "--points",
        "grid" => "--t-min/--t-max",
        "t" => "--t",
        "atoms" => "--diag",
        "b" | "c" | "breakpoints" | "values" | "resolution" | "profile" => "--profile",
        "n" | "N" => "--n",
        "M" => "--m",
        "trials" => "--trials",
        "window" => "--window",
        _ => return None,
    })
}

impl From<htspectra::Error> for CliError {
    fn from(e: htspectra::Error) -> Self {
        match &e {
            htspectra::Error::InvalidParameter { name, reason } => match flag_of(name) {
                Some(flag) => CliError::config(flag, reason.clone()),
                None => CliError::Config {
                    flag: name.to_string(),
                    message: reason.clone(),
                },
            },
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
