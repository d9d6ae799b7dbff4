//! Fixed-length text generation by chaining n-grams under probability
//! threshold constraints.
//!
//! The pipeline is: [`corpus`] extraction, [`scoring`], the immutable
//! [`index::NgramTable`], filtering in [`propagator`], exhaustive
//! enumeration in [`search`], and sentence [`ranking`].

pub mod corpus;
pub mod error;
pub mod index;
pub mod oracle;
pub mod propagator;
pub mod ranking;
pub mod report;
pub mod scoring;
pub mod search;
pub mod stats;
pub mod synthetic;
pub mod tsv;

pub use corpus::{extract_ngrams, tokenize, Extraction, Lexicon, RawNgram, WordId};
pub use error::{Error, Result};
pub use index::{NgramId, NgramTable};
pub use propagator::{admissible_successors, Criterion, Direction, FilterConfig, StepBound};
pub use ranking::{PplSource, RankedSolution};
pub use scoring::{ScoreKind, ScoreSource, ScoredNgram, ScoredSet};
pub use search::{enumerate, enumerate_with_workers, Limits, SearchOutcome, SearchState, Solution};
pub use stats::DistributionStats;
