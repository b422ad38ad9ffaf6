//! Compliance scoring and reports over weight tables.

mod compliance;
mod reports;

use thiserror::Error;

pub use compliance::{accuracy, compliance, ComplianceResult, Rule, Scorer, SliceAccuracy, SliceKey, WeightScorer, NEAR_TIE};
pub use reports::{
    group_cosine_similarity, shifts_to_csv, weight_shift_report, CosineMatrix, WeightShift,
};

use crate::error::KbError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("pair `{0}` is unlabeled")]
    Unlabeled(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("feature `{0}` is missing from one of the weight tables")]
    Domain(String),
}
