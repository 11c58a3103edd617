use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dangling reference: {kind} `{id}` does not exist")]
    DanglingReference { kind: &'static str, id: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown passage `{0}`")]
    UnknownPassage(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("mean of the input vectors is the zero vector")]
    ZeroMean,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid seed distribution: {0}")]
    InvalidSeeds(String),

    #[error("subgraph contains no propositions")]
    EmptySubgraph,

    #[error("malformed LLM response ({reason}): {raw}")]
    MalformedResponse { reason: String, raw: String },

    #[error("LLM response contained no entities")]
    EmptyEntities,

    #[error("LLM response is {len} bytes, limit is {max}")]
    ResponseTooLong { len: usize, max: usize },

    #[error("extraction failed for all {0} passages")]
    AllPassagesFailed(usize),

    #[error("provider error: {message}")]
    Provider { message: String, retryable: bool },

    #[error("provider returned dimension {found}, index expects {expected}")]
    DimensionDrift { expected: usize, found: usize },

    #[error("path does not match graph: {0}")]
    PathGraphMismatch(String),

    #[error("no seeds: every seed group is empty")]
    NoSeeds,

    #[error("gold passage set is empty")]
    EmptyGold,

    #[error("no evaluation cases")]
    EmptyCases,

    #[error("deadline exceeded")]
    Timeout,

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("invalid record at line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn dangling(kind: &'static str, id: impl Into<String>) -> Self {
        Error::DanglingReference {
            kind,
            id: id.into(),
        }
    }

    pub(crate) fn provider(message: impl Into<String>, retryable: bool) -> Self {
        Error::Provider {
            message: message.into(),
            retryable,
        }
    }

    /// Errors raised while talking to an embedding or LLM endpoint.
    pub fn is_provider_error(&self) -> bool {
        matches!(
            self,
            Error::Provider { .. } | Error::DimensionDrift { .. } | Error::AllPassagesFailed(_)
        )
    }

    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::Provider {
                retryable: true,
                ..
            }
        )
    }
}
