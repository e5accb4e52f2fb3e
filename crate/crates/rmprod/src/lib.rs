//! File formats, subcommands, and the verification suite behind the `rmprod`
//! command-line tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod dyson;
pub mod error;
pub mod output;
pub mod schema;
pub mod verify;
