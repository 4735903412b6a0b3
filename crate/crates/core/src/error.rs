use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input bytes are not well-formed.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A record parsed but violates an instance invariant.
    #[error("invalid instance `{id}`: {message}")]
    Validation { id: String, message: String },

    /// A configuration value is out of range; `field` names the offending key.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("non-finite gradient entry in component `{component}`")]
    NonFiniteGradient { component: &'static str },

    #[error("gold label index {index} out of range for {num_labels} labels")]
    LabelOutOfRange { index: usize, num_labels: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("training the fold-{fold} sub-model failed: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage {stage} selects no instances")]
    EmptyStage { stage: usize },

    #[error("seeds without a partner in every arm: {seeds:?}")]
    UnmatchedSeeds { seeds: Vec<u64> },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub(crate) fn validation(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { id: id.into(), message: message.into() }
    }
}
