//! Trainer, splits and conversion.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizkb_core::augment::*;
use vizkb_core::kb::shorthand::parse;
use vizkb_core::kb::*;
use vizkb_core::training::*;

fn ds() -> std::sync::Arc<Dataset> {
    std::sync::Arc::new(
        Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 100).with_extent(1.0, 9.0),
            FieldDef::new("n", DataType::String, 5),
        ])
        .with_rows(100),
    )
}

fn pair(id: &str, l: &str, r: &str) -> DesignPair {
    let d = ds();
    DesignPair::new(id, parse(l, d.clone()).unwrap(), parse(r, d).unwrap(), PairSource::Corpus).unwrap()
}

fn separable(d: usize, n: usize, seed: u64) -> (Vec<TrainExample>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut out = Vec::new();
    while out.len() < n {
        let x: Vec<f64> = (0..d).map(|_| f64::from(rng.random_range(-2i32..=2))).collect();
        let s: f64 = x.iter().zip(&truth).map(|(a, b)| a * b).sum();
        if s.abs() < 0.05 {
            continue;
        }
        out.push(TrainExample {
            x,
            y: if s > 0.0 { 1 } else { -1 },
            pair_id: format!("p{}", out.len()),
            orientation: Orientation::Original,
        });
    }
    (out, truth)
}

fn with_twins(examples: Vec<TrainExample>) -> Vec<TrainExample> {
    let mut out = Vec::new();
    for e in examples {
        out.push(TrainExample {
            x: e.x.iter().map(|v| -v).collect(),
            y: -e.y,
            pair_id: e.pair_id.clone(),
            orientation: Orientation::Rotated,
        });
        out.push(e);
    }
    out
}

fn train_acc(m: &ModelCoefficients, cat: &FeatureCatalog, ex: &[TrainExample]) -> f64 {
    let ok = ex
        .iter()
        .filter(|e| (m.decision(cat, &e.x) > 0.0) == (e.y > 0))
        .count();
    ok as f64 / ex.len() as f64
}

#[test]
fn examples_per_label() {
    let cat = FeatureCatalog::builtin();
    let p = pair("a", "point: x=q, y=q", "bar: x=n, y=q:mean").labeled(Label::Left, LabelProvenance::Manual);
    let ex = pair_to_examples(&p, &cat).unwrap();
    assert_eq!(ex.len(), 2);
    assert_eq!((ex[0].y, ex[0].orientation), (-1, Orientation::Original));
    assert_eq!((ex[1].y, ex[1].orientation), (1, Orientation::Rotated));
    assert!(ex[0].x.iter().zip(&ex[1].x).all(|(a, b)| *a == -*b));
    assert!(ex[0].x.iter().any(|v| *v != 0.0));

    let tie = p.clone().labeled(Label::Equal, LabelProvenance::Manual);
    let ex = pair_to_examples(&tie, &cat).unwrap();
    assert_eq!(ex.len(), 4);
    assert_eq!(ex.iter().map(|e| i32::from(e.y)).sum::<i32>(), 0);

    let mut same = p.clone();
    same.right = same.left.clone();
    assert!(pair_to_examples(&same, &cat).unwrap().iter().all(|e| e.x.iter().all(|v| *v == 0.0)));

    let mut unl = p;
    unl.label = None;
    assert!(matches!(pair_to_examples(&unl, &cat), Err(TrainError::Unlabeled(_))));
}

fn dummy_pairs(n: usize, groups: usize) -> Vec<DesignPair> {
    (0..n)
        .map(|i| {
            let mut p = pair(&format!("p{i:04}"), "point: x=q", "tick: x=q");
            if groups > 0 {
                p.group = Some(format!("g{}", i % groups));
            }
            p
        })
        .collect()
}

#[test]
fn split_sizes() {
    let plan = make_splits(&dummy_pairs(786, 0), 0.15, 5, 1).unwrap();
    assert_eq!(plan.holdout.len(), 118);
    let plan = make_splits(&dummy_pairs(20, 0), 0.15, 5, 1).unwrap();
    assert_eq!(plan.holdout.len(), 3);
    let sizes: Vec<_> = plan.folds.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![4, 4, 3, 3, 3]);
    assert_eq!(plan, make_splits(&dummy_pairs(20, 0), 0.15, 5, 1).unwrap());
    assert!(matches!(
        make_splits(&dummy_pairs(5, 0), 0.15, 5, 1),
        Err(TrainError::TooFewPairs { got: 5, need: 6 })
    ));
}

#[test]
fn splits_are_stratified() {
    let pairs = dummy_pairs(300, 3);
    let plan = make_splits(&pairs, 0.15, 5, 9).unwrap();
    let group = |id: &str| pairs.iter().find(|p| p.id == id).unwrap().group.clone().unwrap();
    for cell in std::iter::once(&plan.holdout).chain(&plan.folds) {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for id in cell {
            *counts.entry(group(id)).or_default() += 1;
        }
        let (lo, hi) = (counts.values().min().unwrap(), counts.values().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
    }
}

proptest! {
    #[test]
    fn split_integrity(n in 6usize..200, k in 2usize..7, groups in 0usize..4, seed in any::<u64>()) {
        prop_assume!(n > k);
        let pairs = dummy_pairs(n, groups);
        let plan = make_splits(&pairs, 0.15, k, seed).unwrap();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for id in plan.holdout.iter().chain(plan.folds.iter().flatten()) {
            *seen.entry(id.as_str()).or_default() += 1;
        }
        prop_assert_eq!(seen.len(), n);
        prop_assert!(seen.values().all(|c| *c == 1));
        prop_assert_eq!(plan.holdout.len(), ((0.15 * n as f64).round() as usize).min(n - k));
        let sizes: Vec<_> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn quadruple_leaves_gradient_unchanged(
        params in prop::collection::vec(-3.0f64..3.0, 4),
        xq in prop::collection::vec(-2i32..=2, 3),
        seed in any::<u64>(),
    ) {
        let (base, _) = separable(3, 20, seed);
        let xq: Vec<f64> = xq.into_iter().map(f64::from).collect();
        let mut with = base.clone();
        for (sign, o) in [(1.0, Orientation::Original), (-1.0, Orientation::Rotated)] {
            for y in [-1, 1] {
                with.push(TrainExample {
                    x: xq.iter().map(|v| sign * v).collect(),
                    y,
                    pair_id: "tie".into(),
                    orientation: o,
                });
            }
        }
        let (l0, g0) = loss_and_gradient(&base, &params, 1e-3);
        let (l1, g1) = loss_and_gradient(&with, &params, 1e-3);
        prop_assert!((l0 - l1).abs() <= 1e-12);
        for (a, b) in g0.iter().zip(&g1) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn rotated_twin_negates_prediction(seed in any::<u64>(), x in prop::collection::vec(-3i32..=3, 4)) {
        let cat = FeatureCatalog::builtin();
        let names: Vec<&str> = cat.names().take(4).collect();
        let cat = cat.subset(&names).unwrap();
        let (ex, _) = separable(4, 30, seed);
        let cfg = TrainConfig { max_epochs: 200, ..Default::default() };
        let m = train_logistic(&with_twins(ex), &cat, &cfg).unwrap();
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = m.decision(&cat, &x) - m.intercept;
        let b = m.decision(&cat, &neg) - m.intercept;
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn conversion_preserves_argmin(
        coeffs in prop::collection::vec(-2.0f64..2.0, 6),
        x in prop::collection::vec(-2i32..=2, 6),
    ) {
        let names: Vec<String> = (0..6).map(|i| format!("f{i}")).collect();
        let m = ModelCoefficients {
            coefficients: names.iter().cloned().zip(coeffs.iter().copied()).collect(),
            intercept: 0.3,
            meta: meta(),
        };
        let w = coefficients_to_weights(&m);
        let exact: f64 = coeffs.iter().zip(&x).map(|(c, v)| c * f64::from(*v)).sum();
        prop_assume!(exact.abs() > 2.0 * 6.0 / 1000.0);
        let int: i64 = names.iter().zip(&x).map(|(n, v)| w.get(n).unwrap() * i64::from(*v)).sum();
        prop_assert_eq!(int.signum() as f64, exact.signum());
    }
}

fn meta() -> TrainingMeta {
    TrainingMeta {
        family: ModelFamily::Logistic,
        epochs: 0,
        converged: true,
        seed: 0,
        lambda: 0.0,
        tol: 0.0,
        final_loss: 0.0,
        n_examples: 0,
        n_effective: 0,
    }
}

#[test]
fn conversion_examples() {
    let m = ModelCoefficients {
        coefficients: [("max", 1.223), ("min", -0.712), ("zero", 0.0), ("tiny", -0.0003), ("half", 0.0005)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        intercept: 5.0,
        meta: meta(),
    };
    let w = coefficients_to_weights(&m);
    assert_eq!(w.get("max"), Some(1223));
    assert_eq!(w.get("min"), Some(-712));
    assert_eq!(w.get("zero"), Some(0));
    assert_eq!(w.get("tiny"), Some(-1));
    assert_eq!(w.get("half"), Some(1));
    assert_eq!(w.provenance, WeightProvenance::Learned);
    assert_eq!(w.weights.len(), 5);
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (ex, _) = separable(5, 60, 11);
    let ex = with_twins(ex);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p: Vec<f64> = (0..6).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, g) = loss_and_gradient(&ex, &p, 1e-3);
        for j in 0..p.len() {
            let h = 1e-5;
            let (mut a, mut b) = (p.clone(), p.clone());
            a[j] += h;
            b[j] -= h;
            let fd = (loss_and_gradient(&ex, &a, 1e-3).0 - loss_and_gradient(&ex, &b, 1e-3).0) / (2.0 * h);
            worst = worst.max((fd - g[j]).abs() / g[j].abs().max(1e-3));
        }
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

#[test]
fn separable_fits() {
    let cat = FeatureCatalog::builtin();
    let (ex, _) = separable(cat.len(), 200, 5);
    let ex = with_twins(ex);
    let cfg = TrainConfig::default();
    let lr = train_logistic(&ex, &cat, &cfg).unwrap();
    assert!(train_acc(&lr, &cat, &ex) >= 0.99, "{}", train_acc(&lr, &cat, &ex));
    assert!(lr.intercept.abs() < 1e-3, "{}", lr.intercept);
    let svm = train_linear_svm(&ex, &cat, &cfg).unwrap();
    assert!(train_acc(&svm, &cat, &ex) >= 0.99, "{}", train_acc(&svm, &cat, &ex));
    assert!(svm.intercept.abs() < 1e-3, "{}", svm.intercept);
    assert_eq!(lr, train_logistic(&ex, &cat, &cfg).unwrap());
}

#[test]
fn single_class_is_rejected() {
    let cat = FeatureCatalog::builtin();
    let (mut ex, _) = separable(cat.len(), 10, 5);
    for e in &mut ex {
        e.y = 1;
    }
    assert!(matches!(train_logistic(&ex, &cat, &TrainConfig::default()), Err(TrainError::SingleClass)));
}

#[test]
fn svm_sign_pattern_matches_grid_search() {
    let cat = FeatureCatalog::builtin();
    let names: Vec<&str> = cat.names().take(2).collect();
    let cat = cat.subset(&names).unwrap();
    let pts = [([2.0, 1.0], 1), ([1.0, 2.0], 1), ([-1.0, 0.5], -1), ([0.5, -2.0], -1)];
    let ex: Vec<TrainExample> = pts
        .iter()
        .enumerate()
        .map(|(i, (x, y))| TrainExample { x: x.to_vec(), y: *y, pair_id: format!("g{i}"), orientation: Orientation::Original })
        .collect();
    // exhaustive search over a weight grid for the minimal hinge loss
    let hinge = |w: [f64; 3]| -> f64 {
        pts.iter().map(|(x, y)| (1.0 - f64::from(*y) * (w[0] * x[0] + w[1] * x[1] + w[2])).max(0.0)).sum()
    };
    let grid: Vec<f64> = (-40..=40).map(|i| f64::from(i) * 0.05).collect();
    let mut best = ([0.0; 3], f64::INFINITY);
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                let l = hinge([a, b, c]);
                if l < best.1 {
                    best = ([a, b, c], l);
                }
            }
        }
    }
    let sign = |v: f64| if v > 0.0 { 1 } else { -1 };
    let grid_pattern: Vec<i32> = pts.iter().map(|(x, _)| sign(best.0[0] * x[0] + best.0[1] * x[1] + best.0[2])).collect();
    let cfg = TrainConfig { lambda: 0.0, ..Default::default() };
    let m = train_linear_svm(&ex, &cat, &cfg).unwrap();
    let pattern: Vec<i32> = ex.iter().map(|e| sign(m.decision(&cat, &e.x))).collect();
    assert_eq!(pattern, grid_pattern);
}

#[test]
fn cross_validation_on_planted_and_random_labels() {
    let kb = KnowledgeBase::builtin();
    let pool = common::planted::pool(&kb);
    let hidden = common::planted::hidden_weights(&kb.catalog, 42);
    let cfg = TrainConfig::default();

    let pairs = common::planted::planted_pairs(&pool, &kb.catalog, &hidden, 1000, 1, false);
    let plan = make_splits(&pairs, 0.15, 5, 1).unwrap();
    let cv = cross_validate(&pairs, &plan, ModelFamily::Logistic, &kb.catalog, &cfg).unwrap();
    assert!(cv.mean >= 0.95, "{cv:?}");
    assert_eq!(cv, cross_validate(&pairs, &plan, ModelFamily::Logistic, &kb.catalog, &cfg).unwrap());

    let noise = common::planted::planted_pairs(&pool, &kb.catalog, &hidden, 300, 2, true);
    let plan = make_splits(&noise, 0.15, 5, 1).unwrap();
    let cv = cross_validate(&noise, &plan, ModelFamily::Logistic, &kb.catalog, &cfg).unwrap();
    assert!((cv.mean - 0.5).abs() <= 0.1, "{cv:?}");

    let mut bad = plan.clone();
    bad.folds[2].clear();
    assert!(matches!(
        cross_validate(&noise, &bad, ModelFamily::Logistic, &kb.catalog, &cfg),
        Err(TrainError::EmptyFold(2))
    ));
}

#[test]
fn coefficients_json_round_trip() {
    let cat = FeatureCatalog::builtin();
    let (ex, _) = separable(cat.len(), 40, 5);
    let m = train_logistic(&with_twins(ex), &cat, &TrainConfig { max_epochs: 50, ..Default::default() }).unwrap();
    let back: ModelCoefficients = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
    assert_eq!(m.coefficients.len(), cat.len());
}
