use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file or text.
    #[error("format error{}: {message}", location(.context, .line))]
    Format {
        context: String,
        line: Option<usize>,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Not enough data to compute a quantity (too few beats, rows, folds...).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cohort is empty after filtering")]
    EmptyCohort,

    #[error("zero-variance feature column `{0}`")]
    ZeroVariance(String),

    #[error("features missing from hub mapping: {}", .0.join(", "))]
    UnmappedFeatures(Vec<String>),

    #[error("ranking undefined: target vector has zero norm")]
    ZeroTarget,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

fn location(context: &str, line: &Option<usize>) -> String {
    match (context.is_empty(), line) {
        (true, None) => String::new(),
        (true, Some(l)) => format!(" at line {l}"),
        (false, None) => format!(" in {context}"),
        (false, Some(l)) => format!(" in {context} at line {l}"),
    }
}

impl Error {
    pub(crate) fn format(
        context: impl Into<String>,
        line: Option<usize>,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the input data rather than the configuration
    /// or the numerical pipeline.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Format { .. }
            | Error::EmptyCohort
            | Error::ZeroVariance(_)
            | Error::UnmappedFeatures(_)
            | Error::InsufficientData(_) => true,
            Error::Stage { source, .. } => source.is_data_error(),
            _ => false,
        }
    }

    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
