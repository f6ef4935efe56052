//! Experiment driver: JSON configs in, CSV/JSONL/JSON data files plus a
//! manifest out. Rerunning a manifest reproduces every data file byte for
//! byte at any worker count.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod output;

pub use config::{Experiment, Overrides, RunConfig};
pub use error::{CliError, Result};
pub use experiments::{replay, run, RunOutcome};
pub use manifest::RunManifest;
