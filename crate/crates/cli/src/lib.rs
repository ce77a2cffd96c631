//! Command-line front end for the `svie` solver: TOML run configurations and
//! the `simulate`, `picard` and `verify` subcommands.

pub mod commands;
pub mod config;

pub use commands::{
    cmd_picard, cmd_simulate, cmd_verify, CheckRecord, EXIT_CHECK_FAILED, EXIT_NOT_CONVERGED,
    EXIT_OK,
};
pub use config::{CoefficientChoice, InlineCoefficients, RunConfig, SCHEMA};
