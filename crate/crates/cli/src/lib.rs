//! Command implementations behind the `perceptkit` binary.

pub mod commands;
pub mod server;
pub mod sweep_file;

use perceptkit::Error;

/// Process exit status for an error: 1 for problems with the user's
/// input, 2 for the environment (files, network, endpoints).
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::Lookup(_)
        | Error::Conflict(_)
        | Error::NotFound(_)
        | Error::Json(_)
        | Error::GenerationFailure { .. } => 1,
        _ => 2,
    }
}
