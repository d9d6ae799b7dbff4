use std::io;

use crate::search::{SearchOutcome, StopReason};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("n-gram order must be at least 2, got {0}")]
    OrderTooSmall(usize),

    #[error("history count is zero")]
    ZeroHistory,

    #[error("no score for n-gram `{0}` and no default score configured")]
    MissingScore(String),

    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: score `{value}` is not finite")]
    NonFiniteScore { line: usize, value: String },

    #[error("line {line}: perplexity `{value}` is not a positive finite number")]
    NonPositivePpl { line: usize, value: String },

    #[error("n-grams of order {found} mixed with order {expected}")]
    MixedOrder { expected: usize, found: usize },

    #[error("duplicate n-gram `{0}`")]
    DuplicateNgram(String),

    #[error("empty input")]
    EmptyInput,

    #[error("no n-grams left after excluding boundary n-grams")]
    EmptyAfterFilter,

    #[error("n-gram id {0} out of range")]
    InvalidId(u32),

    #[error("chain is broken at position {0}: not a successor")]
    BrokenChain(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("oracle refused: {0} chains exceed the materialization guard")]
    OracleTooLarge(u64),

    #[error("search stopped early ({reason}); {} partial solutions kept", .partial.solutions.len())]
    LimitExceeded {
        reason: StopReason,
        partial: Box<SearchOutcome>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}
