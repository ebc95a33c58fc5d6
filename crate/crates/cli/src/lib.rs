//! Driver for the `zoll` binary: configs, file formats, a rayon executor
//! and one function per subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;
