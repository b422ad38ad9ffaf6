use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{train_classifier_labeler, ClassifierConfig, LabelError, PreferenceClassifier};
use crate::augment::DesignPair;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Manual,
    #[default]
    ActiveMl,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub strategy: Strategy,
    pub batch_size: usize,
    pub max_iterations: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::ActiveMl,
            batch_size: 20,
            max_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Active,
    Retraining,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainQuery {
    pub pair_id: String,
    pub confidence: f64,
}

/// Queue bookkeeping for one labeling session. Retraining itself happens
/// outside: `answer` reports when a batch is done, `install_batch` resumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSession {
    pub session_id: String,
    pub config: SessionConfig,
    pub queue: VecDeque<String>,
    /// 1-based; never exceeds `max_iterations`.
    pub iteration: usize,
    pub answered_in_batch: usize,
    pub answered_total: usize,
    pub retrain_count: usize,
    pub state: SessionState,
}

impl LabelSession {
    /// `initial` must hold only pairs awaiting a manual label. An active
    /// session keeps the first batch of it.
    pub fn new(session_id: impl Into<String>, config: SessionConfig, initial: Vec<String>) -> Self {
        let mut queue: VecDeque<String> = initial.into();
        if config.strategy == Strategy::ActiveMl {
            queue.truncate(config.batch_size.max(1));
        }
        let state = if queue.is_empty() {
            SessionState::Complete
        } else {
            SessionState::Active
        };
        Self {
            session_id: session_id.into(),
            config,
            queue,
            iteration: 1,
            answered_in_batch: 0,
            answered_total: 0,
            retrain_count: 0,
            state,
        }
    }

    pub fn next(&self) -> Option<&str> {
        match self.state {
            SessionState::Active => self.queue.front().map(String::as_str),
            _ => None,
        }
    }

    pub fn is_queued(&self, pair_id: &str) -> bool {
        self.queue.iter().any(|q| q == pair_id)
    }

    /// Removes an answered pair. Returns true when the batch is finished and
    /// the model should be retrained.
    pub fn answer(&mut self, pair_id: &str) -> Result<bool, LabelError> {
        if self.state != SessionState::Active {
            return Err(LabelError::SessionComplete);
        }
        let pos = self
            .queue
            .iter()
            .position(|q| q == pair_id)
            .ok_or_else(|| LabelError::NotQueued(pair_id.to_string()))?;
        self.queue.remove(pos);
        self.answered_in_batch += 1;
        self.answered_total += 1;
        match self.config.strategy {
            Strategy::Manual => {
                if self.queue.is_empty() {
                    self.state = SessionState::Complete;
                }
                Ok(false)
            }
            Strategy::ActiveMl => {
                let done = self.queue.is_empty() || self.answered_in_batch >= self.config.batch_size;
                if done {
                    self.state = SessionState::Retraining;
                    self.retrain_count += 1;
                }
                Ok(done)
            }
        }
    }

    /// Resumes after retraining with the next batch; an empty batch or the
    /// last iteration completes the session.
    pub fn install_batch(&mut self, batch: Vec<String>) {
        self.answered_in_batch = 0;
        if batch.is_empty() || self.iteration >= self.config.max_iterations {
            self.queue.clear();
            self.state = SessionState::Complete;
            return;
        }
        self.iteration += 1;
        self.queue = batch.into_iter().take(self.config.batch_size.max(1)).collect();
        self.state = SessionState::Active;
    }
}

/// Something that can say how sure it is about a pair, in `[0.5, 1]`.
pub trait ConfidenceModel: Send + Sync {
    fn confidence(&self, pair: &DesignPair) -> Result<f64, LabelError>;
}

impl ConfidenceModel for PreferenceClassifier {
    fn confidence(&self, pair: &DesignPair) -> Result<f64, LabelError> {
        Ok(self.predict(pair)?.1)
    }
}

pub trait ModelTrainer: Send + Sync {
    fn train(&self, labeled: &[DesignPair]) -> Result<Box<dyn ConfidenceModel>, LabelError>;
}

/// Retrains the MLP labeler, without its CV report.
#[derive(Debug, Clone, Default)]
pub struct MlpTrainer {
    pub config: ClassifierConfig,
}

impl ModelTrainer for MlpTrainer {
    fn train(&self, labeled: &[DesignPair]) -> Result<Box<dyn ConfidenceModel>, LabelError> {
        let config = ClassifierConfig {
            cv_folds: 0,
            ..self.config.clone()
        };
        Ok(Box::new(train_classifier_labeler(labeled, &config)?))
    }
}

/// The `batch_size` pairs whose confidence is closest to 0.5, ties by id.
pub fn active_learning_step(
    session: &LabelSession,
    model: &dyn ConfidenceModel,
    unlabeled: &[&DesignPair],
) -> Result<Vec<UncertainQuery>, LabelError> {
    if session.state == SessionState::Complete || unlabeled.is_empty() {
        return Err(LabelError::SessionComplete);
    }
    let mut scored = unlabeled
        .iter()
        .map(|p| {
            Ok(UncertainQuery {
                pair_id: p.id.clone(),
                confidence: model.confidence(p)?,
            })
        })
        .collect::<Result<Vec<_>, LabelError>>()?;
    scored.sort_by(|a, b| {
        (a.confidence - 0.5)
            .abs()
            .total_cmp(&(b.confidence - 0.5).abs())
            .then_with(|| a.pair_id.cmp(&b.pair_id))
    });
    scored.truncate(session.config.batch_size.max(1));
    Ok(scored)
}
