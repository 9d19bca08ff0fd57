//! Library surface of the experiment CLI: config parsing and the
//! subcommand implementations, kept callable for integration tests.

pub mod commands;
pub mod config;

pub use commands::{cmd_gen_data, cmd_run, cmd_sweep, cmd_validate, CliError};
pub use config::{parse_config, parse_config_str, ConfigError, ExperimentFile};
