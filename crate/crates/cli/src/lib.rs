//! Command-line front end for `netident`: spec-file parsing, run manifests
//! and the subcommands behind the `netident` binary.
//!
//! Exit codes: 0 success, 1 input error, 2 infeasible certificate,
//! 3 divergence (partial output kept).

pub mod commands;
pub mod error;
pub mod manifest;
pub mod spec_file;

pub use error::CliError;
