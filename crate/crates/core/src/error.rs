//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("empty aggregate")]
    EmptyAggregate,

    #[error("score {0} outside [0,1]")]
    ScoreOutOfRange(f64),

    #[error("token {0:?} contains whitespace")]
    InvalidToken(String),

    #[error("{0}")]
    InvalidInstance(String),

    #[error("span ({utt},{start}..{end}) invalid: {reason}")]
    InvalidSpan {
        utt: usize,
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("model/feature mismatch: {0}")]
    ModelMismatch(String),

    #[error("no context")]
    NoContext,

    #[error("empty reference")]
    EmptyReference,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("config contradiction: {0}")]
    ConfigContradiction(String),

    #[error("rewrite not encodable as keep/insert decisions: {0}")]
    UnencodableRewrite(String),

    #[error("agreement rate is zero")]
    ZeroAgreement,

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}
