//! Synthetic pairs labeled by a hidden integer weight table.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizkb_core::augment::{DesignPair, Label, LabelProvenance, PairSource};
use vizkb_core::enumerator::{Completion, EnumerationBounds, Enumerator, PartialSpec};
use vizkb_core::kb::*;

pub fn pool(kb: &KnowledgeBase) -> Vec<Completion> {
    let ds = Arc::new(
        Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 300).with_extent(1.0, 90.0),
            FieldDef::new("z", DataType::Number, 200).with_extent(-5.0, 50.0),
            FieldDef::new("n", DataType::String, 6),
            FieldDef::new("hn", DataType::String, 40),
        ])
        .with_rows(300),
    );
    let en = Enumerator::new(kb);
    let bounds = EnumerationBounds::default();
    let mut out = Vec::new();
    for encs in 1..=2 {
        out.extend(en.completions(&PartialSpec::new(ds.clone(), 1, encs), &bounds, None).unwrap());
    }
    out
}

/// Random integer weights in `[-20, 100]`, seeded.
pub fn hidden_weights(catalog: &FeatureCatalog, seed: u64) -> WeightTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: BTreeMap<String, i64> = catalog
        .names()
        .map(|n| (n.to_string(), rng.random_range(-20..=100)))
        .collect();
    WeightTable::new(weights, WeightProvenance::Manual)
}

fn planted_cost(c: &Completion, catalog: &FeatureCatalog, w: &WeightTable) -> i64 {
    catalog
        .names()
        .zip(&c.counts)
        .map(|(n, k)| w.get(n).unwrap() * i64::from(*k))
        .sum()
}

/// `n` pairs over the pool, ties skipped, labeled by `w`. When `random_labels`
/// the label is a coin flip instead.
pub fn planted_pairs(
    pool: &[Completion],
    catalog: &FeatureCatalog,
    w: &WeightTable,
    n: usize,
    seed: u64,
    random_labels: bool,
) -> Vec<DesignPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = pool.choose(&mut rng).unwrap();
        let b = pool.choose(&mut rng).unwrap();
        let (ca, cb) = (planted_cost(a, catalog, w), planted_cost(b, catalog, w));
        if ca == cb || a.key == b.key {
            continue;
        }
        let label = if random_labels {
            if rng.random_bool(0.5) { Label::Left } else { Label::Right }
        } else if ca < cb {
            Label::Left
        } else {
            Label::Right
        };
        let id = format!("planted-{}", out.len());
        out.push(
            DesignPair::new(id, a.spec.clone(), b.spec.clone(), PairSource::Corpus)
                .unwrap()
                .labeled(label, LabelProvenance::Manual),
        );
    }
    out
}
