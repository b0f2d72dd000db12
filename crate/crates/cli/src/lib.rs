//! Library side of the `optiscore` command-line tool.

pub mod commands;
pub mod data;
pub mod error;
pub mod model_file;

pub use error::{CliError, CliResult};
