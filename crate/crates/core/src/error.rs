use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SprintError> = std::result::Result<T, E>;

/// Every failure the library can report. Variants are grouped by the
/// CLI exit-code class they map to (see [`SprintError::exit_code`]).
#[derive(Debug, Error)]
pub enum SprintError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("row {row}, column {column}: cell value {value:?} is not 0 or 1")]
    NonBinaryCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate question id {0:?}")]
    DuplicateQuestion(String),

    #[error("missing question id at row {0}")]
    MissingQuestionId(usize),

    #[error("header does not match head catalog: {0}")]
    CatalogMismatch(String),

    #[error(
        "no baseline column: add a `base` column (unpruned-model correctness, 0/1 per question) \
         after `question_id`/`subject` in the outcome CSV"
    )]
    MissingBaseline,

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("every question has an empty positive set; nothing to train on")]
    NoTrainableQuestions,

    #[error("question {0} has no positive head; such rows must be filtered before the loss")]
    EmptyPositiveSet(usize),

    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("model file checksum mismatch (file truncated or corrupted)")]
    Checksum,

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    FormatVersion { found: u32, supported: u32 },

    #[error("not a model file: {0}")]
    BadMagic(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SprintError {
    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        SprintError::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SprintError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the failure class: 2 usage, 3 parse,
    /// 4 align, 5 numeric/diverge, 6 io.
    pub fn exit_code(&self) -> i32 {
        use SprintError::*;
        match self {
            Argument(_) => 2,
            Parse { .. }
            | NonBinaryCell { .. }
            | DuplicateQuestion(_)
            | MissingQuestionId(_)
            | CatalogMismatch(_)
            | MissingBaseline
            | Checksum
            | FormatVersion { .. }
            | BadMagic(_) => 3,
            Dimension(_) | Alignment(_) | NoTrainableQuestions | EmptyPositiveSet(_) => 4,
            Numeric(_) | Diverged { .. } => 5,
            Io { .. } => 6,
        }
    }
}
