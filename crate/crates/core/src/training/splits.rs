use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::augment::DesignPair;

pub const DEFAULT_HOLDOUT: f64 = 0.15;
pub const DEFAULT_FOLDS: usize = 5;

/// Pair-level split: every example of a pair lands in the pair's cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub holdout: Vec<String>,
    pub folds: Vec<Vec<String>>,
    pub rng_seed: u64,
}

impl SplitPlan {
    /// Cell of a pair id: `None` for holdout, `Some(i)` for fold `i`.
    pub fn cell(&self, id: &str) -> Option<Option<usize>> {
        if self.holdout.iter().any(|h| h == id) {
            return Some(None);
        }
        self.folds.iter().position(|f| f.iter().any(|h| h == id)).map(Some)
    }

    pub fn training_ids(&self) -> BTreeSet<&str> {
        self.folds.iter().flatten().map(String::as_str).collect()
    }
}

/// Holdout of `round(frac * n)` pairs, then the rest dealt round-robin into
/// `k` folds. Groups (when tagged) are interleaved so every cell sees each
/// group in proportion.
pub fn make_splits(pairs: &[DesignPair], holdout_frac: f64, k: usize, seed: u64) -> Result<SplitPlan, TrainError> {
    let n = pairs.len();
    if k == 0 || n < k + 1 {
        return Err(TrainError::TooFewPairs { got: n, need: k + 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for p in pairs {
        strata
            .entry(p.group.as_deref().unwrap_or(""))
            .or_default()
            .push(p.id.as_str());
    }
    let mut ranked: Vec<(f64, &str, &str)> = Vec::with_capacity(n);
    for (group, ids) in strata.iter_mut() {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let m = ids.len() as f64;
        for (i, id) in ids.iter().enumerate() {
            ranked.push(((i as f64 + 0.5) / m, group, id));
        }
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let order: Vec<String> = ranked.into_iter().map(|(_, _, id)| id.to_string()).collect();

    let h = ((holdout_frac * n as f64).round() as usize).min(n - k);
    let holdout = order[..h].to_vec();
    let mut folds = vec![Vec::new(); k];
    for (i, id) in order[h..].iter().enumerate() {
        folds[i % k].push(id.clone());
    }
    Ok(SplitPlan {
        holdout,
        folds,
        rng_seed: seed,
    })
}
