use std::path::PathBuf;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("numerical overflow in enterprise `{enterprise}` at period {period}")]
    NumericalOverflow { enterprise: String, period: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("insufficient history: period {period} needs lag {lag} (t must exceed the lag)")]
    InsufficientHistory { period: usize, lag: usize },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("unknown enterprise `{0}`")]
    UnknownEnterprise(String),

    #[error("unknown measure `{0}` (expected u1..u9 or v1..v10)")]
    UnknownMeasure(String),

    #[error("parameter selection is empty")]
    EmptySelection,

    #[error("correlation needs at least 2 parameters, got {0}")]
    TooFewParameters(usize),

    #[error("period {period} outside the time grid 1..={t_max}")]
    PeriodOutOfRange { period: usize, t_max: usize },

    #[error("negative export flow {0}")]
    NegativeFlow(f64),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("runs are not comparable: {0}")]
    Mismatch(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("checksum mismatch for {0}")]
    Checksum(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for input/validation problems, 3 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_)
            | Error::Parse { .. }
            | Error::Csv { .. }
            | Error::UnknownMeasure(_) => 2,
            Error::Io { path, .. } if !path.exists() => 2,
            _ => 3,
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::NumericalOverflow { .. } => "numerical_overflow",
            Error::Dimension { .. } => "dimension",
            Error::InsufficientHistory { .. } => "insufficient_history",
            Error::UnknownParameter(_) => "unknown_parameter",
            Error::UnknownEnterprise(_) => "unknown_enterprise",
            Error::UnknownMeasure(_) => "unknown_measure",
            Error::EmptySelection => "empty_selection",
            Error::TooFewParameters(_) => "too_few_parameters",
            Error::PeriodOutOfRange { .. } => "period_out_of_range",
            Error::NegativeFlow(_) => "negative_flow",
            Error::Invalid(_) => "invalid",
            Error::Mismatch(_) => "mismatch",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Checksum(_) => "checksum",
        }
    }
}
