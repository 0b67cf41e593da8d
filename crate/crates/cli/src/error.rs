//! Error type and its one-line stderr form.

use std::io;
use std::path::PathBuf;

use exciton_fcs::{
    bath::BathError, generator::GeneratorError, lds::LdsError, model::ModelError,
    trajectories::TrajectoryError,
};
use thiserror::Error;

/// Everything that can stop a command.
#[derive(Debug, Error)]
pub enum CliError {
    /// Inconsistent or incomplete configuration.
    #[error("{0}")]
    Config(String),
    /// Unreadable or malformed input file.
    #[error("{path}: {message}")]
    Input {
        /// Offending file.
        path: PathBuf,
        /// What went wrong.
        message: String,
    },
    /// Writing results failed.
    #[error("{path}: {source}")]
    Output {
        /// Target file or directory.
        path: PathBuf,
        /// Underlying IO error.
        source: io::Error,
    },
    /// Model construction failed.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Bad bath parameters.
    #[error(transparent)]
    Bath(#[from] BathError),
    /// Channel enumeration or selection failed.
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    /// Spectral computation failed.
    #[error(transparent)]
    Lds(#[from] LdsError),
    /// Trajectory simulation failed.
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

impl CliError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Input { .. } => "input",
            CliError::Output { .. } => "output",
            CliError::Model(_) => "model",
            CliError::Bath(_) => "bath",
            CliError::Generator(_) => "channel",
            CliError::Lds(_) => "spectral",
            CliError::Trajectory(_) => "trajectory",
        }
    }

    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input { .. } => 2,
            _ => 1,
        }
    }

    /// One-line JSON object suitable for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
