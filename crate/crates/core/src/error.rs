use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or inconsistent input data.
    Data,
    /// The numerics failed (non-finite values, degenerate matrices).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("line {line}: invalid field `{field}`: {message}")]
    InvalidField {
        line: usize,
        field: &'static str,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient corpus duration: need {target_s} s, have {available_s} s (short by {shortfall_s} s)")]
    InsufficientDuration {
        target_s: f64,
        available_s: f64,
        shortfall_s: f64,
    },

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("feature matrix has no nonzero entries")]
    ZeroMatrix,

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("topic id {topic_id} out of range (model has {n_topics} topics)")]
    BadTopic { topic_id: usize, n_topics: usize },

    #[error("degenerate topic {0}: all term weights are zero")]
    DegenerateTopic(usize),

    #[error("unsupported model version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("model fingerprint mismatch: stored {stored}, computed {computed}")]
    HashMismatch { stored: String, computed: String },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("label sets are not aligned: {0}")]
    Alignment(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("doc id `{0}` cannot be resolved to a call segment")]
    UnresolvableDocId(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ZeroMatrix | Error::NonFinite { .. } | Error::DegenerateTopic(_) => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Data,
        }
    }

    /// Short stable identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::MissingField { .. } => "missing_field",
            Error::InvalidField { .. } => "invalid_field",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InsufficientDuration { .. } => "insufficient_duration",
            Error::EmptyVocabulary => "empty_vocabulary",
            Error::ZeroMatrix => "zero_matrix",
            Error::NonFinite { .. } => "non_finite",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::BadTopic { .. } => "bad_topic",
            Error::DegenerateTopic(_) => "degenerate_topic",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::HashMismatch { .. } => "hash_mismatch",
            Error::CorruptModel(_) => "corrupt_model",
            Error::Alignment(_) => "alignment",
            Error::LengthMismatch(_) => "length_mismatch",
            Error::UnresolvableDocId(_) => "unresolvable_doc_id",
        }
    }
}
