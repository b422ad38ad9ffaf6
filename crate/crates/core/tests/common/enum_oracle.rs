//! Naive generate-and-filter over the full single-layer grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use vizkb_core::kb::*;

const AGGREGATES: [Aggregate; 4] = [Aggregate::None, Aggregate::Count, Aggregate::Mean, Aggregate::Sum];
const BINS: [Option<u32>; 3] = [None, Some(10), Some(25)];

fn slots(ds: &Arc<Dataset>) -> Vec<Encoding> {
    let mut refs: Vec<FieldRef> = ds.fields.iter().map(|f| FieldRef::field(f.name.clone())).collect();
    refs.push(FieldRef::Count);
    let mut out = Vec::new();
    for ch in Channel::ALL {
        for f in &refs {
            for agg in AGGREGATES {
                for bin in BINS {
                    let enc = Encoding {
                        channel: ch,
                        field: f.clone(),
                        aggregate: agg,
                        bin,
                        stack: Stack::None,
                    };
                    // drop encodings that are structurally malformed on their own
                    let probe = ChartSpec::new(
                        Arc::clone(ds),
                        vec![Mark::new(MarkType::Point, vec![enc.clone()])],
                        vec![Scale::new(ch, ScaleType::Linear)],
                    );
                    if validate(&probe).is_ok() {
                        out.push(enc);
                    }
                }
            }
        }
    }
    out
}

fn facets(ds: &Dataset) -> Vec<Option<Facet>> {
    let mut out = vec![None];
    for direction in [FacetDirection::Row, FacetDirection::Col] {
        for f in &ds.fields {
            for bin in [None, Some(10)] {
                out.push(Some(Facet { direction, field: f.name.clone(), bin }));
            }
        }
    }
    out
}

/// Canonical hashes of every valid single-layer chart with `n` (1 or 2)
/// encodings.
pub fn brute_force(ds: &Arc<Dataset>, n: usize) -> BTreeSet<String> {
    brute_force_specs(ds, n).into_keys().collect()
}

/// Every valid single-layer chart with `n` encodings, keyed by canonical
/// hash. Grammar conventions mirrored: a field appears at most once per
/// layer, a faceted field is not encoded, one scale per used channel.
pub fn brute_force_specs(ds: &Arc<Dataset>, n: usize) -> BTreeMap<String, ChartSpec> {
    assert!(n == 1 || n == 2);
    let slots = slots(ds);
    let facets = facets(ds);
    let mut tuples: Vec<Vec<Encoding>> = Vec::new();
    for a in &slots {
        if n == 1 {
            tuples.push(vec![a.clone()]);
            continue;
        }
        for b in &slots {
            if a.field == b.field {
                continue;
            }
            tuples.push(vec![a.clone(), b.clone()]);
        }
    }
    let mut out = BTreeMap::new();
    for encs in &tuples {
        let channels: Vec<Channel> = encs
            .iter()
            .map(|e| e.channel)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut scale_sets: Vec<Vec<Scale>> = vec![vec![]];
        for &ch in &channels {
            scale_sets = scale_sets
                .into_iter()
                .flat_map(|s| {
                    ScaleType::ALL.into_iter().map(move |t| {
                        let mut s = s.clone();
                        s.push(Scale::new(ch, t));
                        s
                    })
                })
                .collect();
        }
        for mark in MarkType::ALL {
            for scales in &scale_sets {
                for facet in &facets {
                    if let Some(f) = facet {
                        if encs.iter().any(|e| e.field.name() == f.field) {
                            continue;
                        }
                    }
                    let mut spec = ChartSpec::new(
                        Arc::clone(ds),
                        vec![Mark::new(mark, encs.clone())],
                        scales.clone(),
                    );
                    spec.facet = facet.clone();
                    if matches!(validate(&spec), Ok(v) if v.is_empty()) {
                        out.entry(spec.canonical_hash()).or_insert(spec);
                    }
                }
            }
        }
    }
    out
}
