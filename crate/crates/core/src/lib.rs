//! Multiword-expression identification toolkit.
//!
//! Gold MWE annotations are projected onto three per-token binary labels
//! (START, END, INSIDE); per-token probabilities from any scorer are turned
//! back into MWE predictions by threshold reconstruction, then evaluated with
//! exact-match precision, recall and F1.

pub mod augment;
mod bits;
pub mod corpus;
pub mod digest;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod jsonl;
pub mod pipeline;
pub mod projection;
pub mod reconstruct;
pub mod scoring;
pub mod tune;

pub use corpus::{Corpus, MweAnnotation, MweType, Sentence, Split, Token};
pub use error::{Error, Result};
pub use evaluate::{evaluate, micro_prf, EvalReport, MatchCounts, Prf};
pub use projection::{project, LabelProjection, ProjectionArtifact};
pub use reconstruct::{
    reconstruct_sentence, OverlapPolicy, PredictedMwe, ReconstructionConfig, Thresholds,
};
pub use scoring::TokenProbabilities;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
