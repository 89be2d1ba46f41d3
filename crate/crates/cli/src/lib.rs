//! Command-line plumbing for the segmentation model: run configuration,
//! series file parsing, artifact serialization, and workflow dispatch.
//! The statistical machinery itself lives in the `episeg` crate.

pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use config::{Mode, RunConfig};
pub use error::{render_error, CliError, Result};
