//! Batch front end for the salience toolkit: a seeded, file-based pipeline
//! from simulation through partition analysis.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod reps;

pub use commands::{run, Command, Context};
pub use config::Config;
pub use manifest::RunManifest;

use salience::Error;

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => 2,
        Error::Numerical(_) => 4,
        Error::Data(_) | Error::Shape(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
    }
}

/// Stable one-line error label.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::InvalidInput(_) => "invalid_input",
        Error::Numerical(_) => "numerical",
        Error::Data(_) => "data",
        Error::Shape(_) => "shape",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}
