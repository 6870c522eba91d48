//! Library side of the `hetgof` command-line tool.

pub mod args;
pub mod config;
pub mod data;
pub mod run;

pub use run::{main_with_args, CliError, VERSION};
