use std::path::PathBuf;

use thiserror::Error;

use crate::fleet::TargetId;

pub type Result<T> = std::result::Result<T, PmpError>;

#[derive(Debug, Error)]
pub enum PmpError {
    /// A scalar argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A zero input entered a derivative that is unbounded at zero.
    #[error("marginal product is singular: input {index} is zero")]
    Singular { index: usize },

    #[error("degenerate record: {0}")]
    DegenerateRecord(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    /// Wraps a per-record failure with the record's identity.
    #[error("vessel {vessel} / target {target}: {source}")]
    Record {
        vessel: String,
        target: TargetId,
        #[source]
        source: Box<PmpError>,
    },

    #[error("no records for target {0}")]
    EmptyTarget(TargetId),

    #[error("no catch limit supplied for target {0}")]
    MissingAcl(TargetId),

    #[error(
        "calibrated shadow value for {target} is {lambda} > 0; the base-year catch limit cannot be \
         reproduced as a binding constraint. Model it as non-binding or revise the input data"
    )]
    PositiveShadowValue { target: TargetId, lambda: f64 },

    #[error(
        "multiplier search for {target} did not converge: bracket [{lo}, {hi}], \
         relative gap {gap:e} after {iterations} iterations"
    )]
    NonConvergence {
        target: TargetId,
        lo: f64,
        hi: f64,
        gap: f64,
        iterations: usize,
    },

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("{path}:{line}{}: {message}", column.as_ref().map(|c| format!(" (column {c})")).unwrap_or_default())]
    Schema {
        path: PathBuf,
        line: u64,
        column: Option<String>,
        message: String,
    },

    #[error("unknown year {0} in cost index table")]
    UnknownYear(i32),

    #[error("unknown output format {0:?} (expected csv or json)")]
    UnknownFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl PmpError {
    pub fn for_record(self, vessel: &str, target: &TargetId) -> Self {
        PmpError::Record {
            vessel: vessel.to_string(),
            target: target.clone(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PmpError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical solver rather than of the inputs.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            PmpError::NonConvergence { .. } => true,
            PmpError::Record { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
