use thiserror::Error;

use crate::qcore::Diagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid {what}: {report}")]
    Invalid { what: &'static str, report: Diagnostics },

    #[error("cannot normalize vector (norm {norm:e})")]
    Normalization { norm: f64 },

    #[error("impossible outcome: probability {probability:e} is below the zero threshold")]
    ImpossibleOutcome { probability: f64 },

    #[error("{name} must be {expected}, got {value}")]
    Parameter {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },

    #[error("repertoire is empty")]
    EmptyRepertoire,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("series length mismatch: `{name}` has {found} values, expected {expected}")]
    SeriesLength {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("invalid value for `{field}`: {message}")]
    InvalidField { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn field(field: impl Into<String>, message: impl ToString) -> Self {
        Error::InvalidField {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Stable machine-readable kind used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Invalid { .. } => "invalid",
            Error::Normalization { .. } => "normalization",
            Error::ImpossibleOutcome { .. } => "impossible_outcome",
            Error::Parameter { .. } => "parameter",
            Error::EmptyRepertoire => "empty_repertoire",
            Error::Precondition(_) => "precondition",
            Error::SearchFailure(_) => "search_failure",
            Error::UnknownTask(_) => "unknown_task",
            Error::SeriesLength { .. } => "series_length",
            Error::UnknownExperiment(_) => "unknown_experiment",
            Error::MissingField(_) => "missing_field",
            Error::InvalidField { .. } => "invalid_field",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// True for errors caused by a malformed configuration rather than a failed run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownExperiment(_)
                | Error::MissingField(_)
                | Error::InvalidField { .. }
                | Error::Json(_)
        )
    }
}
