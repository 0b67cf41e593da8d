//! Command-line front end for `exciton-fcs`: configuration files, scan
//! orchestration over a worker pool, and CSV/JSON/SVG output.

#![deny(missing_docs)]

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use cli::{main_with_args, Cli};
pub use config::{Format, ModelFile, PartialConfig, RunConfig};
pub use error::CliError;
