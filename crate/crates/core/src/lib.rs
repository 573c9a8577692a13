//! Toolkit for building difficulty-tiered four-option MCQ benchmarks,
//! measuring token and position selection bias of answer-producing models,
//! and correcting option logits with an ensemble bias vector.
//!
//! Module map:
//!
//! * [`types`], [`numeric`], [`ordering`]: shared domain values and pure primitives.
//! * [`builder`]: distractor selection, tiering, position balancing.
//! * [`providers`]: fixture, HTTP and synthetic sources of logits and embeddings.
//! * [`simbias`]: synthetic biased answering model used as a test oracle.
//! * [`debias`]: general/contextual bias estimation and adaptive logit correction.
//! * [`analyzer`]: accuracy, selection distributions, bias score, consistency, reports.
//! * [`cli`]: the `mcqdebias` command-line entry point.

pub mod analyzer;
pub mod builder;
pub mod cli;
pub mod debias;
pub mod error;
pub mod jsonl;
pub mod numeric;
pub mod ordering;
pub mod providers;
pub mod seeding;
pub mod simbias;
pub mod types;

pub use error::{Error, ProviderError, Result};
pub use numeric::{argmax4, cosine_similarity, softmax4, zero_center};
pub use ordering::{apply_ordering, IdentifierAlphabet, OrderingScheme};
pub use types::{
    BiasVector, EvalRecord, LogitVector, McqItem, McqOption, OptionSlot, PresentedItem,
    PresentedOption, ProbabilityVector, Tier, Variant, NUM_OPTIONS,
};
