//! Configuration parsing and run orchestration for the `broadwell` binary.

mod config;
mod run;

pub use config::{
    parse_config, parse_config_str, GridConfig, InitialConfig, InitialKind, Mode, OutputConfig,
    RunConfig,
};
pub use run::{
    exit_code_for, main_entry, run, EXIT_IO, EXIT_OK, EXIT_SOLVER, EXIT_VIOLATION, PICARD_AGREEMENT,
};
