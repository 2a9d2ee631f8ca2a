//! Library surface of the `tps` pipeline: configuration, artifact formats,
//! and the command implementations the binary dispatches to.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod model_file;

pub use config::{RunConfig, SamplerMethod};
pub use error::{CliError, CliResult};
