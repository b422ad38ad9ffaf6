//! Preference labels from people, a classifier, an uncertainty loop or a
//! chat model.

mod classifier;
mod llm;
mod session;
mod store;
mod vocab;

use thiserror::Error;

pub use classifier::{classify_labels, train_classifier_labeler, ClassifierConfig, PreferenceClassifier};
pub use llm::{
    build_prompt, llm_label, llm_label_all, parse_choice, ChatBackend, ChatMessage, Choice, HttpChatBackend, LlmConfig,
    LlmError, LlmOutcome, Transcript, API_KEY_ENV, PROMPT_VERSION,
};
pub use session::{
    active_learning_step, ConfidenceModel, LabelSession, MlpTrainer, ModelTrainer, SessionConfig, SessionState,
    Strategy, UncertainQuery,
};
pub use store::{LabelRecord, LabelStore, LogEntry, PersistentStore, DEFAULT_SNAPSHOT_EVERY};
pub use vocab::{primitive_diff_vector, Vocabulary};

use crate::error::SpecError;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("labeled data has a single class")]
    SingleClass,
    #[error("no labeled pairs")]
    NoLabels,
    #[error("session complete")]
    SessionComplete,
    #[error("pair `{0}` already has a manual label")]
    Conflict(String),
    #[error("unknown pair `{0}`")]
    UnknownPair(String),
    #[error("pair `{0}` is not in the current batch")]
    NotQueued(String),
    #[error("label store line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("label store io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}
