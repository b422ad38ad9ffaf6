//! Augmentation pipelines that grow a pair corpus, plus the coverage and
//! dependency analyses that decide what to augment.

mod ablation;
mod corpus;
mod coverage;
mod deps;
mod diff;
mod illegible;
mod pair;
mod primitive;
mod seed;

use thiserror::Error;

pub use ablation::{
    binary_candidates, binary_precondition, feature_augment_binary, feature_augment_unary, AblationConfig, AblationStatus, BinaryResult,
    CompletionCache, RejectReason, UnaryResult,
};
pub use corpus::{read_pairs_jsonl, write_pairs_jsonl};
pub use coverage::{coverage_report, CoverageReport, DEFAULT_COVERAGE_THRESHOLD, DOMINANT_SHARE};
pub use deps::{analyze_dependencies, probe_set, DepEdge, DependencyGraph, Relation};
pub use diff::{extract_design_differences, DesignDifference, DiffEntry};
pub use illegible::{flag_illegible, Illegibility, DEFAULT_DENSITY_CAP};
pub use pair::{DesignPair, Label, LabelProvenance, Lineage, PairSource};
pub use primitive::{primitive_augment, primitive_augment_corpus, DEFAULT_MAX_NEW};
pub use seed::{builtin_seeds, seed_augment, SeedDataSpec, SeedResult, DEFAULT_N_TOP};

use crate::enumerator::EnumerateError;
use crate::error::{KbError, SpecError};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("pair `{0}` has identical sides")]
    IdenticalSides(String),
    #[error("pair `{0}` has a label but no label provenance")]
    UnprovenancedLabel(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error("corpus line {line}: {source}")]
    Corpus {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

impl From<SpecError> for AugmentError {
    fn from(e: SpecError) -> Self {
        AugmentError::Kb(e.into())
    }
}
