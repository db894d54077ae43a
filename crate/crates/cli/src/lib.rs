//! Command implementations behind the `dante` binary: config-driven
//! training runs, certification runs, metrics files, SVG plots and run
//! comparison tables.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod plot;
pub mod run;
pub mod verify;

use thiserror::Error;

pub use artifacts::{
    read_metrics_csv, read_weights, write_metrics_csv, write_weights, Manifest, RunSummary,
};
pub use compare::{cmd_compare, CompareRow};
pub use config::{ArchitectureConfig, DatasetConfig, ExperimentConfig};
pub use plot::{cmd_plot, render_svg, Metric};
pub use run::{cmd_train, load_data, run_experiment, ExperimentRun, PreparedData};
pub use verify::{cmd_verify_slqc, VerifyConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Certification(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.to_string(),
            source,
        }
    }
}

impl From<dante_core::Error> for CliError {
    fn from(e: dante_core::Error) -> Self {
        match e {
            dante_core::Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
