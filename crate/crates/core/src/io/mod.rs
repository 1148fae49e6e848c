//! Run configuration, output formats and the orchestration used by the
//! command-line tool.

mod checkpoint;
mod commands;
mod config;
mod csv;
mod ndjson;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use commands::{
    constants_report, execute_run, exit_code, lemma_suite, oracle_check, refinement_study,
    run_sweep, twin_compare, LemmaRequest, OracleReport, RunOutcome, SweepEntry, SweepSpec,
};
pub use config::{
    digest_of, GridSection, InitialData, InitialKind, ModelSection, OutputSection, RunConfig,
    SolverSection,
};
pub use csv::{read_trajectory_csv, write_trajectory_csv, CsvRow, CSV_HEADER};
pub use ndjson::{certificate_json, write_certificates};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::constants::ConstantsError;
use crate::dynamics::{DynamicsError, TwinError};
use crate::torus::TorusError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Twin(#[from] TwinError),
}

impl IoError {
    pub(crate) fn at(path: &Path, source: std::io::Error) -> Self {
        IoError::File { path: path.to_path_buf(), source }
    }

    /// Attaches `path` to a bare I/O error.
    pub(crate) fn with_path(self, path: &Path) -> Self {
        match self {
            IoError::Io(source) => IoError::at(path, source),
            other => other,
        }
    }
}
