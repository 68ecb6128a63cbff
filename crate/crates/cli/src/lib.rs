//! Command line front end: config loading and the `pmfix` subcommands.

pub mod commands;
pub mod config;
