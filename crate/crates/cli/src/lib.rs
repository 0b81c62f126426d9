//! Library half of the `abach` command-line driver: run configuration,
//! parameter files and the four subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod law;
