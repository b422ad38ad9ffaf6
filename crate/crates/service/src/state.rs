use std::collections::HashMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, PoisonError, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;
use vizkb_core::augment::{read_pairs_jsonl, AugmentError, DesignPair, LabelProvenance};
use vizkb_core::config::ProjectConfig;
use vizkb_core::kb::{FeatureCatalog, KnowledgeBase, WeightProvenance, WeightTable};
use vizkb_core::labeling::{
    active_learning_step, ChatBackend, LabelError, LabelSession, LabelStore, MlpTrainer, ModelTrainer,
    PersistentStore, SessionState, Strategy,
};
use vizkb_core::KbError;

const SESSION_FILE: &str = "session.json";

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("no label directory configured")]
    NoLabelDir,
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error("duplicate pair id `{0}` in corpus")]
    DuplicatePair(String),
}

fn read(path: &Path) -> Result<String, StartupError> {
    fs::read_to_string(path).map_err(|source| StartupError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> StartupError {
    StartupError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Builds the knowledge base named by the config: the built-in catalog,
/// optionally narrowed to a JSON list of names, and weights from CSV or JSON.
pub fn load_kb(config: &ProjectConfig) -> Result<KnowledgeBase, StartupError> {
    let mut catalog = FeatureCatalog::builtin();
    if let Some(path) = &config.paths.catalog {
        let names: Vec<String> = serde_json::from_str(&read(path)?).map_err(|e| format_err(path, e))?;
        catalog = catalog.subset(&names)?;
    }
    let weights = match &config.paths.weights {
        Some(path) => load_weights(path)?,
        None => WeightTable::builtin(&catalog),
    };
    Ok(KnowledgeBase::new(catalog, weights)?)
}

pub fn load_weights(path: &Path) -> Result<WeightTable, StartupError> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| format_err(path, e))
    } else {
        WeightTable::from_csv(&text, WeightProvenance::Manual).map_err(|e| format_err(path, e))
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<DesignPair>, StartupError> {
    let file = fs::File::open(path).map_err(|source| StartupError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(read_pairs_jsonl(BufReader::new(file))?)
}

pub(crate) struct Labeling {
    pub store: PersistentStore,
    pub session: LabelSession,
}

pub(crate) struct Inner {
    pub kb: Arc<KnowledgeBase>,
    pub config: ProjectConfig,
    pub corpus: Vec<DesignPair>,
    index: HashMap<String, usize>,
    dir: PathBuf,
    labeling: RwLock<Labeling>,
    trainer: Arc<dyn ModelTrainer>,
    pub llm: Option<Arc<dyn ChatBackend>>,
}

/// Shared service state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

pub struct StateBuilder {
    config: ProjectConfig,
    kb: Option<KnowledgeBase>,
    corpus: Option<Vec<DesignPair>>,
    labels_dir: Option<PathBuf>,
    trainer: Option<Arc<dyn ModelTrainer>>,
    llm: Option<Arc<dyn ChatBackend>>,
}

impl StateBuilder {
    pub fn kb(mut self, kb: KnowledgeBase) -> Self {
        self.kb = Some(kb);
        self
    }

    pub fn corpus(mut self, corpus: Vec<DesignPair>) -> Self {
        self.corpus = Some(corpus);
        self
    }

    pub fn labels_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.labels_dir = Some(dir.into());
        self
    }

    /// Replaces the MLP used between labeling batches.
    pub fn trainer(mut self, trainer: Arc<dyn ModelTrainer>) -> Self {
        self.trainer = Some(trainer);
        self
    }

    /// Chat backend for LLM labeling; without one the endpoint builds an
    /// HTTP backend from the environment on each request.
    pub fn llm(mut self, backend: Arc<dyn ChatBackend>) -> Self {
        self.llm = Some(backend);
        self
    }

    /// Loads whatever was not supplied from the config paths, opens the
    /// label store and restores or starts the labeling session. Blocking.
    pub fn build(self) -> Result<AppState, StartupError> {
        let kb = match self.kb {
            Some(kb) => kb,
            None => load_kb(&self.config)?,
        };
        let corpus = match (self.corpus, &self.config.paths.corpus) {
            (Some(c), _) => c,
            (None, Some(path)) => load_corpus(path)?,
            (None, None) => Vec::new(),
        };
        let mut index = HashMap::with_capacity(corpus.len());
        for (i, p) in corpus.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(StartupError::DuplicatePair(p.id.clone()));
            }
        }
        let dir = self
            .labels_dir
            .or_else(|| self.config.paths.labels.clone())
            .ok_or(StartupError::NoLabelDir)?;
        let store = PersistentStore::open(&dir)?;
        let trainer = self.trainer.unwrap_or_else(|| {
            Arc::new(MlpTrainer {
                config: self.config.classifier.clone(),
            })
        });

        let saved = dir.join(SESSION_FILE);
        let restored = match fs::read_to_string(&saved) {
            Ok(text) => Some(serde_json::from_str::<LabelSession>(&text).map_err(|e| format_err(&saved, e))?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(source) => return Err(StartupError::Io { path: saved, source }),
        };
        let fresh = restored.is_none();
        let mut session = restored.unwrap_or_else(|| {
            let awaiting = store
                .store()
                .awaiting_manual(&corpus)
                .iter()
                .filter(|p| !p.illegible)
                .map(|p| p.id.clone())
                .collect();
            LabelSession::new(format!("session-{}", unix_secs()), self.config.session.clone(), awaiting)
        });
        prune_queue(&mut session, store.store(), &index);

        let state = AppState(Arc::new(Inner {
            kb: Arc::new(kb),
            config: self.config,
            corpus,
            index,
            dir,
            labeling: RwLock::new(Labeling { store, session }),
            trainer,
            llm: self.llm,
        }));
        state.resume(fresh)?;
        Ok(state)
    }
}

fn unix_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Drops queued pairs that are gone, illegible or already manually labeled.
fn prune_queue(session: &mut LabelSession, store: &LabelStore, index: &HashMap<String, usize>) {
    session
        .queue
        .retain(|id| index.contains_key(id) && !store.is_illegible(id) && !store.has_manual(id));
}

impl AppState {
    pub fn builder(config: ProjectConfig) -> StateBuilder {
        StateBuilder {
            config,
            kb: None,
            corpus: None,
            labels_dir: None,
            trainer: None,
            llm: None,
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.0.kb
    }

    pub fn config(&self) -> &ProjectConfig {
        &self.0.config
    }

    pub fn corpus(&self) -> &[DesignPair] {
        &self.0.corpus
    }

    pub fn pair(&self, id: &str) -> Option<&DesignPair> {
        self.0.index.get(id).map(|&i| &self.0.corpus[i])
    }

    pub(crate) fn read(&self) -> RwLockReadGuard<'_, Labeling> {
        self.0.labeling.read().unwrap_or_else(PoisonError::into_inner)
    }

    pub(crate) fn write(&self) -> RwLockWriteGuard<'_, Labeling> {
        self.0.labeling.write().unwrap_or_else(PoisonError::into_inner)
    }

    /// Brings a freshly started or restored session into a servable state.
    fn resume(&self, fresh: bool) -> Result<(), StartupError> {
        let (state, strategy, empty) = {
            let lab = self.read();
            (lab.session.state, lab.session.config.strategy, lab.session.queue.is_empty())
        };
        match (state, strategy) {
            (SessionState::Retraining, _) => self.retrain()?,
            (SessionState::Active, Strategy::ActiveMl) if fresh || empty => {
                // the first batch is chosen by uncertainty when a model can
                // already be trained
                let batch = self.plan_batch();
                let mut lab = self.write();
                if batch.is_empty() {
                    lab.session.queue.clear();
                    lab.session.state = SessionState::Complete;
                } else {
                    lab.session.queue = batch.into_iter().take(lab.session.config.batch_size.max(1)).collect();
                }
                self.save_session(&lab.session)?;
            }
            (SessionState::Active, Strategy::Manual) if empty => {
                let mut lab = self.write();
                lab.session.state = SessionState::Complete;
                self.save_session(&lab.session)?;
            }
            _ => self.save_session(&self.read().session)?,
        }
        Ok(())
    }

    /// Legible pairs with their effective label: the store's record if any,
    /// else the label the pair arrived with.
    pub fn labeled_view(&self, store: &LabelStore) -> Vec<DesignPair> {
        self.0
            .corpus
            .iter()
            .filter(|p| !p.illegible && !store.is_illegible(&p.id))
            .filter_map(|p| match store.effective(&p.id) {
                Some(r) => {
                    let mut out = p.clone();
                    out.label = Some(r.label);
                    out.label_provenance = r.provenance;
                    Some(out)
                }
                None if p.label.is_some() && p.label_provenance != LabelProvenance::None => Some(p.clone()),
                None => None,
            })
            .collect()
    }

    /// Next batch: the most uncertain unlabeled pairs under a model trained
    /// on the current labels, or plain corpus order when no model can be
    /// trained yet.
    fn plan_batch(&self) -> Vec<String> {
        let (session, labeled, awaiting) = {
            let lab = self.read();
            let store = lab.store.store();
            let awaiting: Vec<DesignPair> = store
                .awaiting_manual(&self.0.corpus)
                .into_iter()
                .filter(|p| !p.illegible)
                .cloned()
                .collect();
            (lab.session.clone(), self.labeled_view(store), awaiting)
        };
        if awaiting.is_empty() || session.iteration >= session.config.max_iterations {
            return Vec::new();
        }
        let naive = || awaiting.iter().map(|p| p.id.clone()).collect();
        let model = match self.0.trainer.train(&labeled) {
            Ok(m) => m,
            Err(e) => {
                tracing::info!(error = %e, "no model yet, using corpus order");
                return naive();
            }
        };
        let refs: Vec<&DesignPair> = awaiting.iter().collect();
        let mut probe = session.clone();
        probe.state = SessionState::Active;
        match active_learning_step(&probe, model.as_ref(), &refs) {
            Ok(q) => q.into_iter().map(|q| q.pair_id).collect(),
            Err(e) => {
                tracing::warn!(error = %e, "uncertainty ranking failed, using corpus order");
                naive()
            }
        }
    }

    /// Trains, ranks and installs the next batch. Blocking.
    pub(crate) fn retrain(&self) -> Result<(), LabelError> {
        let batch = self.plan_batch();
        let mut lab = self.write();
        lab.session.install_batch(batch);
        tracing::info!(
            iteration = lab.session.iteration,
            state = ?lab.session.state,
            "labeling batch installed"
        );
        self.save_session(&lab.session)
    }

    pub(crate) fn spawn_retrain(&self) {
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            if let Err(e) = state.retrain() {
                tracing::error!(error = %e, "retraining failed");
            }
        });
    }

    pub(crate) fn save_session(&self, session: &LabelSession) -> Result<(), LabelError> {
        let tmp = self.0.dir.join(format!("{SESSION_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(session).expect("session serializes"))?;
        fs::rename(&tmp, self.0.dir.join(SESSION_FILE))?;
        Ok(())
    }

    pub fn labels_dir(&self) -> &Path {
        &self.0.dir
    }

    /// Removes queued pairs that no longer need a manual answer; an active
    /// batch left empty goes to retraining.
    pub(crate) fn prune(&self, lab: &mut Labeling) -> bool {
        prune_queue(&mut lab.session, lab.store.store(), &self.0.index);
        if lab.session.state == SessionState::Active && lab.session.queue.is_empty() {
            match lab.session.config.strategy {
                Strategy::ActiveMl => {
                    lab.session.state = SessionState::Retraining;
                    lab.session.retrain_count += 1;
                    return true;
                }
                Strategy::Manual => lab.session.state = SessionState::Complete,
            }
        }
        false
    }
}
