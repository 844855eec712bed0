//! Command-line front end for the `qdd` library.

pub mod commands;
pub mod config;

pub use commands::{run, Command, Output};
pub use config::{ConfigError, Format, PulseRange, RunConfig};
