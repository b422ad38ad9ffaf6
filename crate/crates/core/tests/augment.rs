//! Augmentation pipelines end to end.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use vizkb_core::augment::*;
use vizkb_core::enumerator::*;
use vizkb_core::kb::shorthand::parse;
use vizkb_core::kb::*;

fn probe_partials() -> Vec<PartialSpec> {
    let ds = Arc::new(
        Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 300).with_extent(1.0, 90.0),
            FieldDef::new("n", DataType::String, 6),
            FieldDef::new("hn", DataType::String, 40),
        ])
        .with_rows(300),
    );
    vec![PartialSpec::new(ds.clone(), 1, 1), PartialSpec::new(ds, 1, 2)]
}

#[test]
fn seeds_give_280_pairs() {
    let cat = FeatureCatalog::builtin();
    let w = WeightTable::builtin(&cat);
    let seeds = builtin_seeds();
    assert_eq!(seeds.len(), 10);
    let t = Instant::now();
    let out = seed_augment(&seeds, &cat, &w, 8, &EnumerationBounds::default(), 1).unwrap();
    eprintln!("seed augmentation took {:?}; warnings {:?}", t.elapsed(), out.warnings);
    assert_eq!(out.pairs.len(), 280);
    let ids: BTreeSet<_> = out.pairs.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids.len(), 280);
}

#[test]
fn n_top_two_gives_one_pair_per_seed() {
    let cat = FeatureCatalog::builtin();
    let w = WeightTable::builtin(&cat);
    let seeds = &builtin_seeds()[..3];
    let out = seed_augment(seeds, &cat, &w, 2, &EnumerationBounds::default(), 1).unwrap();
    assert_eq!(out.pairs.len(), 3);
    for p in &out.pairs {
        let (cl, cr) = (
            w.cost(&extract_features(&p.left, &cat).unwrap()).unwrap(),
            w.cost(&extract_features(&p.right, &cat).unwrap()).unwrap(),
        );
        match p.label.unwrap() {
            Label::Left => assert!(cl < cr),
            Label::Right => assert!(cr < cl),
            Label::Equal => panic!("seed pairs never tie"),
        }
        assert_eq!(p.label_provenance, LabelProvenance::SeedWeights);
    }
}

#[test]
fn binary_rejections() {
    let kb = KnowledgeBase::builtin();
    let en = Enumerator::new(&kb);
    let partials = probe_partials();
    let bounds = EnumerationBounds::default();
    let probe = probe_set(&en, &partials, &bounds, &[]).unwrap();
    let graph = analyze_dependencies(&probe, &kb.catalog).unwrap();
    assert!(graph.provokes("aggregate_mean", "aggregate"));
    assert!(graph.contradicts("log_x", "linear_x") && graph.contradicts("linear_x", "log_x"));

    let cache = CompletionCache::new(&en, partials, bounds);
    let cfg = AblationConfig::default();
    let r = feature_augment_binary("horizontal_scrolling_x", "high_cardinality_shape", &cache, &graph, None, &cfg).unwrap();
    assert_eq!(r.status, AblationStatus::Rejected { reason: RejectReason::Contradictory });
    let r = feature_augment_binary("aggregate_mean", "aggregate", &cache, &graph, None, &cfg).unwrap();
    assert_eq!(r.status, AblationStatus::Rejected { reason: RejectReason::Provoking });
}

#[test]
fn binary_pairs_share_context() {
    let kb = KnowledgeBase::builtin();
    let en = Enumerator::new(&kb);
    let partials = probe_partials();
    let bounds = EnumerationBounds::default();
    let probe = probe_set(&en, &partials, &bounds, &[]).unwrap();
    let graph = analyze_dependencies(&probe, &kb.catalog).unwrap();
    let cache = CompletionCache::new(&en, partials, bounds);
    let (a, b) = ("enc_color", "log_x");
    assert!(binary_precondition(a, b, &graph, None).is_none());
    let r = feature_augment_binary(a, b, &cache, &graph, None, &AblationConfig::default()).unwrap();
    assert_eq!(r.status, AblationStatus::Complete, "{:?}", r.warnings);
    for p in &r.pairs {
        let (fl, fr) = (kb.features(&p.left).unwrap(), kb.features(&p.right).unwrap());
        assert_eq!(fl.has(a), fr.has(a));
        assert_eq!(p.lineage.as_ref().unwrap().context[a], fl.has(a));
        assert_ne!(fl.has(b), fr.has(b));
    }
    let states: BTreeSet<bool> = r.pairs.iter().map(|p| kb.features(&p.left).unwrap().has(a)).collect();
    assert_eq!(states.len(), 2);
}

#[test]
fn always_present_feature_is_infeasible() {
    let kb = KnowledgeBase::builtin();
    let en = Enumerator::new(&kb);
    let cache = CompletionCache::new(&en, probe_partials(), EnumerationBounds::default());
    let r = feature_augment_unary("encoding", &cache, &AblationConfig::default()).unwrap();
    assert_eq!(r.status, AblationStatus::Infeasible);
    assert!(r.pairs.is_empty());
    assert_eq!(r.warnings.len(), 1);
}

#[test]
fn bin_high_ablation_looks_like_binned_vs_unbinned() {
    let kb = KnowledgeBase::builtin();
    let en = Enumerator::new(&kb);
    let cache = CompletionCache::new(&en, probe_partials(), EnumerationBounds::default());
    let r = feature_augment_unary("bin_high", &cache, &AblationConfig::default()).unwrap();
    assert_eq!(r.pairs.len(), 7);
    for p in &r.pairs {
        let with_left = kb.features(&p.left).unwrap().has("bin_high");
        assert_ne!(with_left, kb.features(&p.right).unwrap().has("bin_high"));
    }
}

#[test]
fn corpus_round_trips_through_jsonl() {
    let ds = Arc::new(Dataset::new(vec![
        FieldDef::new("q", DataType::Number, 50).with_extent(1.0, 9.0),
        FieldDef::new("n", DataType::String, 4),
    ]));
    let p = DesignPair::new(
        "a",
        parse("bar: x=n, y=q:mean", ds.clone()).unwrap(),
        parse("point: x=n, y=q | col=n", ds).unwrap_or_else(|_| panic!()),
        PairSource::Corpus,
    );
    // a faceted field that is also encoded is still a legal corpus chart
    let p = p.unwrap().labeled(Label::Left, LabelProvenance::Manual);
    let mut buf = Vec::new();
    write_pairs_jsonl(&mut buf, std::slice::from_ref(&p)).unwrap();
    let back = read_pairs_jsonl(buf.as_slice()).unwrap();
    assert_eq!(back, vec![p]);
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("\"label\":-1") && text.contains("\"lineage\":null"));
}
