//! Unary and binary feature ablation over enumerated completions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AugmentError, CoverageReport, DependencyGraph, DesignPair, Lineage, PairSource};
use crate::enumerator::{Completion, EnumerationBounds, Enumerator, PartialSpec};
use crate::error::KbError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub pairs_per_feature: usize,
    pub seed: u64,
    /// Completions per side considered when searching for the closest
    /// with/without couple.
    pub candidate_cap: usize,
    pub bounds: EnumerationBounds,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            pairs_per_feature: 7,
            seed: 7,
            candidate_cap: 250,
            bounds: EnumerationBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "code", content = "detail")]
pub enum RejectReason {
    SameFeature,
    UnknownFeature(String),
    Contradictory,
    Provoking,
    /// The feature shows up in more than 90% of corpus charts.
    Dominant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum AblationStatus {
    Complete,
    /// Fewer pairs than requested could be formed.
    Partial { wanted: usize },
    /// No partial admits both a with- and a without-design.
    Infeasible,
    Rejected { reason: RejectReason },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnaryResult {
    pub feature: String,
    pub status: AblationStatus,
    pub pairs: Vec<DesignPair>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinaryResult {
    pub a: String,
    pub b: String,
    pub status: AblationStatus,
    pub pairs: Vec<DesignPair>,
    pub warnings: Vec<String>,
}

/// Lazily enumerated completions per partial, shared across features.
pub struct CompletionCache<'e> {
    enumerator: &'e Enumerator<'e>,
    partials: Vec<PartialSpec>,
    bounds: EnumerationBounds,
    cells: Vec<OnceLock<Vec<Completion>>>,
}

impl<'e> CompletionCache<'e> {
    pub fn new(enumerator: &'e Enumerator<'e>, partials: Vec<PartialSpec>, bounds: EnumerationBounds) -> Self {
        let cells = partials.iter().map(|_| OnceLock::new()).collect();
        Self {
            enumerator,
            partials,
            bounds,
            cells,
        }
    }

    pub fn len(&self) -> usize {
        self.partials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partials.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<&[Completion], AugmentError> {
        if let Some(v) = self.cells[i].get() {
            return Ok(v);
        }
        let v = self.enumerator.completions(&self.partials[i], &self.bounds, None)?;
        Ok(self.cells[i].get_or_init(|| v))
    }

    fn position(&self, feature: &str) -> Result<usize, AugmentError> {
        self.enumerator
            .catalog()
            .position(feature)
            .ok_or_else(|| KbError::UnknownFeature(feature.to_string()).into())
    }
}

/// FNV-1a, so per-feature streams do not depend on std's hasher.
fn mix(seed: u64, parts: &[&str]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for p in parts {
        for b in p.bytes().chain([0xff]) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Evenly spaced sample of at most `cap` indices.
fn sample(idx: Vec<usize>, cap: usize) -> Vec<usize> {
    if idx.len() <= cap || cap == 0 {
        return idx;
    }
    (0..cap).map(|k| idx[k * idx.len() / cap]).collect()
}

fn l1_excluding(a: &[u32], b: &[u32], skip: &[usize]) -> u64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, (&x, &y))| u64::from(x.abs_diff(y)))
        .sum()
}

/// Closest (with, without) couples, ascending by distance then canonically.
fn couples(
    comps: &[Completion],
    with: impl Fn(&Completion) -> bool,
    without: impl Fn(&Completion) -> bool,
    skip: &[usize],
    cap: usize,
) -> Vec<(u64, usize, usize)> {
    let w = sample((0..comps.len()).filter(|&i| with(&comps[i])).collect(), cap);
    let wo = sample((0..comps.len()).filter(|&i| without(&comps[i])).collect(), cap);
    let mut out = Vec::with_capacity(w.len() * wo.len());
    for &i in &w {
        for &j in &wo {
            out.push((l1_excluding(&comps[i].counts, &comps[j].counts, skip), i, j));
        }
    }
    // completions are canonical-ordered, so indices break ties canonically
    out.sort_unstable();
    out
}

fn make_pair(
    id: String,
    with: &Completion,
    without: &Completion,
    source: PairSource,
    lineage: Lineage,
    rng: &mut ChaCha8Rng,
) -> Result<(DesignPair, bool), AugmentError> {
    let flip = rng.random_bool(0.5);
    let (l, r) = if flip { (without, with) } else { (with, without) };
    Ok((DesignPair::new(id, l.spec.clone(), r.spec.clone(), source)?.with_lineage(lineage), !flip))
}

/// Pairs that differ in the presence of one feature, with other feature
/// differences minimized. Partials are visited round-robin in a seeded
/// random order.
pub fn feature_augment_unary(
    feature: &str,
    cache: &CompletionCache<'_>,
    cfg: &AblationConfig,
) -> Result<UnaryResult, AugmentError> {
    let f = cache.position(feature)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, &["unary", feature]));
    let mut order: Vec<usize> = (0..cache.len()).collect();
    order.shuffle(&mut rng);

    let mut lists = Vec::with_capacity(order.len());
    for &p in &order {
        let comps = cache.get(p)?;
        lists.push(couples(comps, |c| c.counts[f] >= 1, |c| c.counts[f] == 0, &[f], cfg.candidate_cap));
    }

    let mut pairs = Vec::new();
    let mut cursor = vec![0usize; order.len()];
    'outer: loop {
        let mut progressed = false;
        for (slot, &p) in order.iter().enumerate() {
            if pairs.len() >= cfg.pairs_per_feature {
                break 'outer;
            }
            let Some(&(_, i, j)) = lists[slot].get(cursor[slot]) else {
                continue;
            };
            cursor[slot] += 1;
            progressed = true;
            let comps = cache.get(p)?;
            let id = format!("unary:{feature}:{}", pairs.len() + 1);
            let (mut pair, left_has) = make_pair(
                id,
                &comps[i],
                &comps[j],
                PairSource::FeatureAugUnary,
                Lineage {
                    ablated: vec![feature.to_string()],
                    ..Default::default()
                },
                &mut rng,
            )?;
            if let Some(l) = pair.lineage.as_mut() {
                l.context.insert(feature.to_string(), left_has);
            }
            pair.group = Some(format!("partial-{p}"));
            pairs.push(pair);
        }
        if !progressed {
            break;
        }
    }

    let (status, warnings) = match pairs.len() {
        0 => (
            AblationStatus::Infeasible,
            vec![format!("`{feature}` cannot be ablated: no partial has designs both with and without it")],
        ),
        n if n < cfg.pairs_per_feature => (
            AblationStatus::Partial {
                wanted: cfg.pairs_per_feature,
            },
            vec![format!("`{feature}`: only {n} of {} pairs", cfg.pairs_per_feature)],
        ),
        _ => (AblationStatus::Complete, vec![]),
    };
    Ok(UnaryResult {
        feature: feature.to_string(),
        status,
        pairs,
        warnings,
    })
}

/// Screens a feature couple for binary ablation.
pub fn binary_precondition(
    a: &str,
    b: &str,
    graph: &DependencyGraph,
    coverage: Option<&CoverageReport>,
) -> Option<RejectReason> {
    if a == b {
        return Some(RejectReason::SameFeature);
    }
    if graph.contradicts(a, b) || graph.contradicts(b, a) {
        return Some(RejectReason::Contradictory);
    }
    if graph.provokes(a, b) || graph.provokes(b, a) {
        return Some(RejectReason::Provoking);
    }
    if let Some(cov) = coverage {
        for f in [a, b] {
            if cov.is_dominant(f) {
                return Some(RejectReason::Dominant(f.to_string()));
            }
        }
    }
    None
}

/// Ablates `b` once in the context where `a` is present and once where it
/// is absent. Both sides of a pair share the state of `a`.
pub fn feature_augment_binary(
    a: &str,
    b: &str,
    cache: &CompletionCache<'_>,
    graph: &DependencyGraph,
    coverage: Option<&CoverageReport>,
    cfg: &AblationConfig,
) -> Result<BinaryResult, AugmentError> {
    let rejected = |reason| BinaryResult {
        a: a.to_string(),
        b: b.to_string(),
        status: AblationStatus::Rejected { reason },
        pairs: vec![],
        warnings: vec![],
    };
    let catalog = cache.enumerator.catalog();
    for f in [a, b] {
        if !catalog.contains(f) {
            return Ok(rejected(RejectReason::UnknownFeature(f.to_string())));
        }
    }
    if let Some(reason) = binary_precondition(a, b, graph, coverage) {
        return Ok(rejected(reason));
    }
    let (fa, fb) = (cache.position(a)?, cache.position(b)?);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, &["binary", a, b]));
    let mut order: Vec<usize> = (0..cache.len()).collect();
    order.shuffle(&mut rng);

    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for a_state in [true, false] {
        let has_a = |c: &Completion| (c.counts[fa] > 0) == a_state;
        let mut best: Option<(u64, usize, usize, usize)> = None;
        for (rank, &p) in order.iter().enumerate() {
            let comps = cache.get(p)?;
            let list = couples(
                comps,
                |c| has_a(c) && c.counts[fb] >= 1,
                |c| has_a(c) && c.counts[fb] == 0,
                &[fa, fb],
                cfg.candidate_cap,
            );
            if let Some(&(d, i, j)) = list.first() {
                if best.is_none_or(|(bd, _, _, _)| d < bd) {
                    best = Some((d, rank, i, j));
                }
            }
        }
        let Some((_, rank, i, j)) = best else {
            warnings.push(format!(
                "no design pair ablates `{b}` with `{a}` {}",
                if a_state { "present" } else { "absent" }
            ));
            continue;
        };
        let comps = cache.get(order[rank])?;
        let context: BTreeMap<String, bool> = [(a.to_string(), a_state)].into();
        let id = format!("binary:{a}:{b}:{}", if a_state { "with" } else { "without" });
        let (mut pair, left_has) = make_pair(
            id,
            &comps[i],
            &comps[j],
            PairSource::FeatureAugBinary,
            Lineage {
                ablated: vec![b.to_string()],
                context,
                ..Default::default()
            },
            &mut rng,
        )?;
        if let Some(l) = pair.lineage.as_mut() {
            l.context.insert(b.to_string(), left_has);
        }
        pair.group = Some(format!("partial-{}", order[rank]));
        pairs.push(pair);
    }
    let status = match pairs.len() {
        0 => AblationStatus::Infeasible,
        1 => AblationStatus::Partial { wanted: 2 },
        _ => AblationStatus::Complete,
    };
    Ok(BinaryResult {
        a: a.to_string(),
        b: b.to_string(),
        status,
        pairs,
        warnings,
    })
}

/// Every feature couple that survives [`binary_precondition`].
pub fn binary_candidates(
    features: &BTreeSet<String>,
    graph: &DependencyGraph,
    coverage: Option<&CoverageReport>,
) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for a in features {
        for b in features {
            if a < b && binary_precondition(a, b, graph, coverage).is_none() {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}
