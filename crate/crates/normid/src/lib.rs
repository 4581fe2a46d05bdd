//! File formats and the command-line front end for `normid-core`.

pub mod cli;
pub mod error;
pub mod formats;

pub use error::CliError;
pub use normid_core;
