//! Command-line front end for `qmachine`.
//!
//! [`spec`] reads machine specs written as s-expressions; [`commands`]
//! defines the subcommands and their output.

pub mod commands;
pub mod spec;

pub use commands::{run_command, Cli, Command};
