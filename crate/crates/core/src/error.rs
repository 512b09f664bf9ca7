use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of an error, used by frontends to pick exit codes and
/// HTTP status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input data or arguments.
    Validation,
    /// Filesystem or encoding failure.
    Io,
    /// Internal invariant was violated.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dangling references: {}", ids.join(", "))]
    DanglingReference { ids: Vec<String> },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate vote by expert {expert_id} on image {image_id}")]
    DuplicateVote { image_id: String, expert_id: String },

    #[error("dataset is invalid: {0}")]
    InvalidDataset(String),

    #[error("unknown image id: {0}")]
    UnknownImage(String),

    #[error("unknown sku: {0}")]
    UnknownSku(String),

    #[error("unknown group: {0}")]
    UnknownGroup(String),

    #[error("unknown style: {0}")]
    UnknownStyle(String),

    #[error("image {0} has no votes")]
    NoLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rejection budget exhausted: {accepted} of {requested} labels after {draws} draws")]
    RejectionBudget {
        requested: usize,
        accepted: usize,
        draws: usize,
    },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown export format: {0}")]
    UnknownFormat(String),

    #[error("malformed {format} document: {message}")]
    Malformed {
        format: &'static str,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Invariant(_) => ErrorKind::Internal,
            _ => ErrorKind::Validation,
        }
    }

    /// Stable snake_case identifier of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse_error",
            Error::DanglingReference { .. } => "dangling_reference",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DuplicateVote { .. } => "duplicate_vote",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::UnknownImage(_) => "unknown_image",
            Error::UnknownSku(_) => "unknown_sku",
            Error::UnknownGroup(_) => "unknown_group",
            Error::UnknownStyle(_) => "unknown_style",
            Error::NoLabel(_) => "no_label",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::RejectionBudget { .. } => "rejection_budget",
            Error::Empty(_) => "empty",
            Error::UnknownFormat(_) => "unknown_format",
            Error::Malformed { .. } => "malformed",
            Error::Invariant(_) => "invariant",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error names an id that does not exist.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            Error::UnknownImage(_)
                | Error::UnknownSku(_)
                | Error::UnknownGroup(_)
                | Error::UnknownStyle(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
