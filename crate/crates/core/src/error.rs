use thiserror::Error;

use crate::kb::{Channel, HardViolation};

/// A spec that cannot be interpreted at all, as opposed to one that merely
/// violates hard constraints.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("unresolved field reference `{0}`")]
    UnknownField(String),
    #[error("invalid field `{name}`: {reason}")]
    InvalidField { name: String, reason: String },
    #[error("a chart needs 1..={max} layers, got {got}")]
    LayerCount { got: usize, max: usize },
    #[error("a layer needs 1..={max} encodings, got {got}")]
    EncodingCount { got: usize, max: usize },
    #[error("encoding on {channel}: {reason}")]
    BadEncoding { channel: Channel, reason: String },
    #[error("channel {0} is encoded but has no scale")]
    MissingScale(Channel),
    #[error("scale on channel {0} has no encoding")]
    OrphanScale(Channel),
    #[error("bin count must be at least 2, got {0}")]
    BinCount(u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("spec violates hard constraints: {}", summarize(.0))]
    Invalid(Vec<HardViolation>),
    #[error("feature `{0}` has no weight")]
    MissingWeight(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("shorthand parse error: {0}")]
    Shorthand(String),
}

fn summarize(v: &[HardViolation]) -> String {
    v.iter()
        .map(|h| h.rule.code())
        .collect::<Vec<_>>()
        .join(", ")
}
