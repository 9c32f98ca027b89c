//! Batch front end: configuration, the end-to-end solve pipeline, file export
//! and the aggregated verification suites.

mod check;
mod config;
mod export;
mod pipeline;

pub use check::{run_checks, CheckConfig, CheckReport, SuiteResult};
pub use config::{DualizeConfig, EmitFlags, SolveConfig};
pub use export::{read_field_csv, write_diagnostics_jsonl, write_field_csv, write_obj};
pub use pipeline::{
    dualize, run_dual_flow, slice_oracle_report, solve_minkowski, SliceOracle, SolveOutput,
    SolveReport,
};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed field file: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("stage `{stage}` failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

impl CliError {
    pub(crate) fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Stage {
            stage,
            message: e.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
