//! From labeled pairs to an integer weight table.

mod examples;
mod linear;
mod splits;

use thiserror::Error;

pub use examples::{pair_to_examples, pairs_to_examples, Orientation, TrainExample};
pub use linear::{
    coefficients_to_weights, cross_validate, fit_pairs, loss_and_gradient, net_examples, NetExample, train, train_linear_svm,
    train_logistic, CvReport, FoldScore, ModelCoefficients, ModelFamily, TrainConfig, TrainingMeta,
};
pub use splits::{make_splits, SplitPlan, DEFAULT_FOLDS, DEFAULT_HOLDOUT};

use crate::error::KbError;
use crate::evaluate::EvalError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("pair `{0}` is unlabeled")]
    Unlabeled(String),
    #[error("training data has a single class")]
    SingleClass,
    #[error("loss became non-finite at epoch {epoch} (last finite loss {last_loss}, |w| = {weight_norm})")]
    NonFinite {
        epoch: usize,
        last_loss: f64,
        weight_norm: f64,
    },
    #[error("coefficient for `{0}` is not finite")]
    NonFiniteCoefficient(String),
    #[error("need at least {need} pairs for this split, got {got}")]
    TooFewPairs { got: usize, need: usize },
    #[error("fold {0} is empty")]
    EmptyFold(usize),
    #[error("pair `{0}` is not in the corpus")]
    UnknownPair(String),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
