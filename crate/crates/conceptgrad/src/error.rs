//! Crate-wide error type with exit-code categories for the CLI.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or invalid argument values.
    #[error("config error: {0}")]
    Config(String),

    /// Input data does not match the declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A single data row failed to parse.
    #[error("row error at line {line} (id {id}): {msg}")]
    Row { line: usize, id: String, msg: String },

    /// A requested split/partition cannot be satisfied.
    #[error("sizing error: {0}")]
    Sizing(String),

    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Inputs that must pair up one-to-one do not.
    #[error("pairing error: {0}")]
    Pairing(String),

    /// Matrix/vector dimensions disagree.
    #[error("shape error: {0}")]
    Shape(String),

    /// A quantity that must be nonzero/finite is not.
    #[error("degeneracy error: {0}")]
    Degeneracy(String),

    /// Training produced a non-finite loss.
    #[error("divergence at epoch {epoch}, batch {batch}: loss is not finite")]
    Divergence { epoch: usize, batch: usize },

    /// Any other numeric failure (non-finite score, SVD failure, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A prompt template could not be rendered.
    #[error("render error: {0}")]
    Render(String),

    /// An LLM response could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Network-level failure after exhausting retries.
    #[error("transport error: {0}")]
    Transport(String),

    /// Offline mode had no fixture for a prompt.
    #[error("fixture miss: no recorded response for prompt sha256 {0}")]
    FixtureMiss(String),

    /// A required upstream artifact is missing.
    #[error("missing artifact {artifact}; run `{producer}` first")]
    Dependency { artifact: String, producer: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code for this error category:
    /// 2 config, 3 dependency, 4 numeric, 5 transport, 1 everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Schema(_)
            | Error::Row { .. }
            | Error::Sizing(_)
            | Error::EmptyInput(_)
            | Error::Pairing(_)
            | Error::Render(_) => 2,
            Error::Dependency { .. } => 3,
            Error::Shape(_)
            | Error::Degeneracy(_)
            | Error::Divergence { .. }
            | Error::Numeric(_) => 4,
            Error::Parse(_) | Error::Transport(_) | Error::FixtureMiss(_) => 5,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
