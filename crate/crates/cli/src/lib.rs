//! Command-line driver for the vibrating-cavity simulator.

pub mod args;
pub mod commands;
pub mod output;
pub mod record;
pub mod spec;

use casimir_core::CasimirError;

pub use args::Cli;
pub use commands::Status;
pub use spec::{InvalidInput, RunSpec};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

pub fn run(cli: &Cli) -> anyhow::Result<Status> {
    let spec = RunSpec::resolve(cli)?;
    commands::dispatch(&spec, output::Style::detect())
}

/// `2` for bad input, `1` for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InvalidInput>().is_some() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<CasimirError>() {
            return if e.is_input_error() { EXIT_INVALID } else { EXIT_FAILURE };
        }
    }
    EXIT_FAILURE
}
