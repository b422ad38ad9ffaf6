use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AugmentError, DesignPair};
use crate::enumerator::{EnumerationBounds, Enumerator, PartialSpec};
use crate::kb::{extract_features, ChartSpec, FeatureCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Provokes,
    Contradicts,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DepEdge {
    pub a: String,
    pub relation: Relation,
    pub b: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub nodes: Vec<String>,
    /// Contradictions are stored in both directions.
    pub edges: BTreeSet<DepEdge>,
    /// Features the probe set never exercised.
    pub undetermined: BTreeSet<String>,
}

impl DependencyGraph {
    pub fn has(&self, a: &str, relation: Relation, b: &str) -> bool {
        self.edges.contains(&DepEdge {
            a: a.to_string(),
            relation,
            b: b.to_string(),
        })
    }

    pub fn provokes(&self, a: &str, b: &str) -> bool {
        self.has(a, Relation::Provokes, b)
    }

    pub fn contradicts(&self, a: &str, b: &str) -> bool {
        self.has(a, Relation::Contradicts, b)
    }
}

/// Empirical co-occurrence analysis: `a` provokes `b` when every probe chart
/// with `a` also has `b` but not conversely; `a` contradicts `b` when both
/// occur but never together.
pub fn analyze_dependencies(
    probe: &[ChartSpec],
    catalog: &FeatureCatalog,
) -> Result<DependencyGraph, AugmentError> {
    let names: Vec<String> = catalog.names().map(str::to_string).collect();
    let mut present: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); names.len()];
    for (i, spec) in probe.iter().enumerate() {
        let fv = extract_features(spec, catalog)?;
        for (f, name) in names.iter().enumerate() {
            if fv.has(name) {
                present[f].insert(i);
            }
        }
    }
    let mut edges = BTreeSet::new();
    let mut undetermined = BTreeSet::new();
    for (a, pa) in present.iter().enumerate() {
        if pa.is_empty() {
            undetermined.insert(names[a].clone());
            continue;
        }
        for (b, pb) in present.iter().enumerate() {
            if a == b || pb.is_empty() {
                continue;
            }
            if pa.is_subset(pb) && !pb.is_subset(pa) {
                edges.insert(DepEdge {
                    a: names[a].clone(),
                    relation: Relation::Provokes,
                    b: names[b].clone(),
                });
            }
            if pa.is_disjoint(pb) {
                edges.insert(DepEdge {
                    a: names[a].clone(),
                    relation: Relation::Contradicts,
                    b: names[b].clone(),
                });
            }
        }
    }
    Ok(DependencyGraph {
        nodes: names,
        edges,
        undetermined,
    })
}

/// Probe charts: every completion of every partial plus the corpus designs,
/// deduplicated.
pub fn probe_set(
    enumerator: &Enumerator<'_>,
    partials: &[PartialSpec],
    bounds: &EnumerationBounds,
    corpus: &[DesignPair],
) -> Result<Vec<ChartSpec>, AugmentError> {
    let mut seen = BTreeMap::new();
    for p in partials {
        for s in enumerator.complete(p, bounds)? {
            seen.entry(s.canonical_hash()).or_insert(s);
        }
    }
    for pair in corpus {
        for s in [&pair.left, &pair.right] {
            seen.entry(s.canonical_hash()).or_insert_with(|| s.canonical());
        }
    }
    Ok(seen.into_values().collect())
}
