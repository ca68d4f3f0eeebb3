//! Host-side tooling around `c2s-core`: binary dataset and checkpoint files,
//! TOML configurations, run manifests, inference timing and delimited-text
//! reports. The `c2s` binary wires these into subcommands.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod report;

pub use error::{LabError, Result};
