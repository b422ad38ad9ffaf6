use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::augment::{DesignPair, Label, LabelProvenance};

/// Which record wins when several provenances label the same pair.
const PRECEDENCE: [LabelProvenance; 6] = [
    LabelProvenance::Manual,
    LabelProvenance::SeedWeights,
    LabelProvenance::ActiveMl,
    LabelProvenance::Ml,
    LabelProvenance::Llm,
    LabelProvenance::None,
];

pub const DEFAULT_SNAPSHOT_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub pair_id: String,
    pub label: Label,
    pub provenance: LabelProvenance,
    pub confidence: f64,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
    /// e.g. `contradictory` for inconsistent dual-orientation answers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl LabelRecord {
    pub fn new(pair_id: impl Into<String>, label: Label, provenance: LabelProvenance, confidence: f64) -> Self {
        Self {
            pair_id: pair_id.into(),
            label,
            provenance,
            confidence,
            timestamp: Some(Utc::now()),
            flag: None,
        }
    }

    pub fn manual(pair_id: impl Into<String>, label: Label) -> Self {
        Self::new(pair_id, label, LabelProvenance::Manual, 1.0)
    }

    pub fn without_timestamp(mut self) -> Self {
        self.timestamp = None;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IllegibleMark {
    pub pair_id: String,
    pub illegible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

/// One line of the label log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogEntry {
    Label(LabelRecord),
    Illegible(IllegibleMark),
}

impl LogEntry {
    pub fn illegible(pair_id: impl Into<String>, reason: Option<String>) -> Self {
        LogEntry::Illegible(IllegibleMark {
            pair_id: pair_id.into(),
            illegible: true,
            reason,
            timestamp: Some(Utc::now()),
        })
    }

    /// One entry per non-blank line.
    pub fn parse_jsonl(text: &str) -> Result<Vec<LogEntry>, LabelError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| LabelError::Parse { line: i + 1, source }))
            .collect()
    }

    pub fn pair_id(&self) -> &str {
        match self {
            LogEntry::Label(r) => &r.pair_id,
            LogEntry::Illegible(m) => &m.pair_id,
        }
    }
}

/// One active record per (pair, provenance); a later record replaces an
/// earlier one with the same key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelStore {
    records: BTreeMap<String, BTreeMap<LabelProvenance, LabelRecord>>,
    illegible: BTreeMap<String, IllegibleMark>,
}

impl LabelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, entry: LogEntry) {
        match entry {
            LogEntry::Label(r) => {
                self.records
                    .entry(r.pair_id.clone())
                    .or_default()
                    .insert(r.provenance, r);
            }
            LogEntry::Illegible(m) if m.illegible => {
                self.illegible.insert(m.pair_id.clone(), m);
            }
            LogEntry::Illegible(m) => {
                self.illegible.remove(&m.pair_id);
            }
        }
    }

    pub fn insert(&mut self, record: LabelRecord) {
        self.apply(LogEntry::Label(record));
    }

    pub fn is_illegible(&self, pair_id: &str) -> bool {
        self.illegible.contains_key(pair_id)
    }

    pub fn illegible_reason(&self, pair_id: &str) -> Option<&str> {
        self.illegible.get(pair_id)?.reason.as_deref()
    }

    pub fn illegible_ids(&self) -> impl Iterator<Item = &str> {
        self.illegible.keys().map(String::as_str)
    }

    pub fn has_manual(&self, pair_id: &str) -> bool {
        self.get(pair_id, LabelProvenance::Manual).is_some()
    }

    pub fn get(&self, pair_id: &str, provenance: LabelProvenance) -> Option<&LabelRecord> {
        self.records.get(pair_id)?.get(&provenance)
    }

    /// Manual first, then seed weights, active ML, ML, LLM.
    pub fn effective(&self, pair_id: &str) -> Option<&LabelRecord> {
        let by = self.records.get(pair_id)?;
        PRECEDENCE.iter().find_map(|p| by.get(p))
    }

    /// The best record among the allowed provenances, in precedence order.
    pub fn effective_among(&self, pair_id: &str, allowed: &[LabelProvenance]) -> Option<&LabelRecord> {
        let by = self.records.get(pair_id)?;
        PRECEDENCE.iter().filter(|p| allowed.contains(p)).find_map(|p| by.get(p))
    }

    pub fn manual_count(&self) -> usize {
        self.records
            .values()
            .filter(|by| by.contains_key(&LabelProvenance::Manual))
            .count()
    }

    pub fn records(&self) -> impl Iterator<Item = &LabelRecord> {
        self.records.values().flat_map(|by| by.values())
    }

    /// Training/evaluation view: legible pairs carrying their effective
    /// label. Pairs without any record are left out.
    pub fn labeled_pairs(&self, pairs: &[DesignPair]) -> Vec<DesignPair> {
        pairs
            .iter()
            .filter(|p| !self.is_illegible(&p.id))
            .filter_map(|p| {
                let r = self.effective(&p.id)?;
                let mut out = p.clone();
                out.label = Some(r.label);
                out.label_provenance = r.provenance;
                Some(out)
            })
            .collect()
    }

    /// Legible pairs with no manual label yet.
    pub fn awaiting_manual<'a>(&self, pairs: &'a [DesignPair]) -> Vec<&'a DesignPair> {
        pairs
            .iter()
            .filter(|p| !self.is_illegible(&p.id) && !self.has_manual(&p.id))
            .collect()
    }

    /// Label records of legible pairs, sorted by pair then provenance.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.records().filter(|r| !self.is_illegible(&r.pair_id)) {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Every entry, illegible marks included, in a stable order.
    pub fn entries(&self) -> Vec<LogEntry> {
        self.records()
            .cloned()
            .map(LogEntry::Label)
            .chain(self.illegible.values().cloned().map(LogEntry::Illegible))
            .collect()
    }

    /// Applies every line. Importing the same text twice leaves the same
    /// state.
    pub fn import_jsonl(&mut self, text: &str) -> Result<usize, LabelError> {
        let entries = LogEntry::parse_jsonl(text)?;
        let n = entries.len();
        for e in entries {
            self.apply(e);
        }
        Ok(n)
    }

    pub fn pair_ids(&self) -> BTreeSet<&str> {
        self.records.keys().chain(self.illegible.keys()).map(String::as_str).collect()
    }
}


/// Append-only JSONL log plus a periodic snapshot. Each mutation is
/// written and synced before it is applied in memory.
#[derive(Debug)]
pub struct PersistentStore {
    dir: PathBuf,
    store: LabelStore,
    log: File,
    since_snapshot: usize,
    snapshot_every: usize,
}

const LOG_FILE: &str = "labels.log.jsonl";
const SNAPSHOT_FILE: &str = "labels.snapshot.jsonl";

impl PersistentStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, LabelError> {
        Self::open_with(dir, DEFAULT_SNAPSHOT_EVERY)
    }

    pub fn open_with(dir: impl AsRef<Path>, snapshot_every: usize) -> Result<Self, LabelError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut store = LabelStore::new();
        let snap = dir.join(SNAPSHOT_FILE);
        if snap.exists() {
            store.import_jsonl(&fs::read_to_string(&snap)?)?;
        }
        let log_path = dir.join(LOG_FILE);
        let mut since_snapshot = 0;
        if log_path.exists() {
            // replay is idempotent, so a crash between snapshot and
            // truncation only repeats work
            since_snapshot = store.import_jsonl(&fs::read_to_string(&log_path)?)?;
        }
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        Ok(Self {
            dir,
            store,
            log,
            since_snapshot,
            snapshot_every: snapshot_every.max(1),
        })
    }

    pub fn store(&self) -> &LabelStore {
        &self.store
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, entry: LogEntry) -> Result<(), LabelError> {
        let mut line = serde_json::to_string(&entry).expect("entry serializes");
        line.push('\n');
        self.log.write_all(line.as_bytes())?;
        self.log.sync_data()?;
        self.store.apply(entry);
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            self.snapshot()?;
        }
        Ok(())
    }

    pub fn append_all(&mut self, entries: impl IntoIterator<Item = LogEntry>) -> Result<usize, LabelError> {
        let mut n = 0;
        for e in entries {
            self.append(e)?;
            n += 1;
        }
        Ok(n)
    }

    pub fn snapshot(&mut self) -> Result<(), LabelError> {
        let mut text = String::new();
        for e in self.store.entries() {
            text.push_str(&serde_json::to_string(&e).expect("entry serializes"));
            text.push('\n');
        }
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        self.log.set_len(0)?;
        self.log.sync_data()?;
        self.since_snapshot = 0;
        Ok(())
    }
}
