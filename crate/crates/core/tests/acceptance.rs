//! One test per headline criterion. Each prints a single PASS/FAIL line.

#![allow(clippy::redundant_closure_call)]

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use common::{enum_oracle, planted, report};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizkb_core::augment::*;
use vizkb_core::enumerator::*;
use vizkb_core::evaluate::*;
use vizkb_core::kb::shorthand::parse;
use vizkb_core::kb::*;
use vizkb_core::training::*;

fn hashes(specs: &[ChartSpec]) -> BTreeSet<String> {
    specs.iter().map(|s| s.canonical_hash()).collect()
}

#[test]
fn enumerator_oracle() {
    let kb = KnowledgeBase::builtin();
    let en = Enumerator::new(&kb);
    let bounds = EnumerationBounds::default();
    let datasets = [
        Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 60).with_extent(1.0, 50.0),
            FieldDef::new("n", DataType::String, 5),
        ])),
        Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 60).with_extent(-4.0, 50.0),
            FieldDef::new("t", DataType::Datetime, 40).with_extent(0.0, 1e6),
        ])),
    ];
    let mut checked = 0;
    let outcome = (|| {
        for ds in &datasets {
            for n in 1..=2 {
                let got = en.complete(&PartialSpec::new(Arc::clone(ds), 1, n), &bounds).map_err(|e| e.to_string())?;
                let got_h = hashes(&got);
                if got_h.len() != got.len() {
                    return Err("duplicate completions".to_string());
                }
                let want = enum_oracle::brute_force(ds, n);
                if got_h != want {
                    return Err(format!(
                        "{n} encodings: {} from search vs {} from brute force ({} missing, {} extra)",
                        got_h.len(),
                        want.len(),
                        want.difference(&got_h).count(),
                        got_h.difference(&want).count()
                    ));
                }
                checked += want.len();
            }
        }
        // constrained search equals the post-filter of the full set
        let one_q = Arc::new(Dataset::new(vec![FieldDef::new("q", DataType::Number, 60).with_extent(1.0, 50.0)]));
        let partial = PartialSpec::new(Arc::clone(&one_q), 1, 2);
        let force: BTreeSet<String> = ["log_x".to_string()].into();
        let forbid: BTreeSet<String> = ["linear_x".to_string()].into();
        let got = en.enumerate_constrained(&partial, &force, &forbid, &bounds).map_err(|e| e.to_string())?;
        let all = en.complete(&partial, &bounds).map_err(|e| e.to_string())?;
        let want: BTreeSet<String> = all
            .iter()
            .filter(|s| {
                let fv = extract_features(s, &kb.catalog).unwrap();
                fv.get("log_x") >= 1 && fv.get("linear_x") == 0
            })
            .map(|s| s.canonical_hash())
            .collect();
        if want.is_empty() || hashes(&got) != want {
            return Err(format!("constrained {} vs post-filter {}", got.len(), want.len()));
        }
        Ok(format!("{checked} designs matched brute force; constrained {} = post-filter", got.len()))
    })();
    report("enumerator-oracle", outcome);
}

fn micro_datasets() -> [Arc<Dataset>; 2] {
    [
        Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 60).with_extent(1.0, 50.0),
            FieldDef::new("n", DataType::String, 5),
        ])),
        Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 60).with_extent(-4.0, 50.0),
            FieldDef::new("t", DataType::Datetime, 40).with_extent(0.0, 1e6),
        ])),
    ]
}

fn micro_partials() -> Vec<PartialSpec> {
    micro_datasets()
        .into_iter()
        .flat_map(|ds| (1..=2).map(move |n| PartialSpec::new(Arc::clone(&ds), 1, n)))
        .collect()
}

/// Cost recomputed from raw counts, without `WeightTable::cost`.
fn own_cost(spec: &ChartSpec, catalog: &FeatureCatalog, w: &WeightTable) -> Result<i64, String> {
    let fv = extract_features(spec, catalog).map_err(|e| e.to_string())?;
    catalog
        .names()
        .map(|n| {
            let wt = w.get(n).ok_or_else(|| format!("no weight for `{n}`"))?;
            Ok(wt * i64::from(fv.get(n)))
        })
        .sum()
}

/// Signed multiset difference of primitive tokens, left minus right.
fn token_delta(l: &ChartSpec, r: &ChartSpec) -> Result<BTreeMap<String, i64>, String> {
    let mut m: BTreeMap<String, i64> = BTreeMap::new();
    for (spec, sign) in [(l, 1), (r, -1)] {
        for t in abstract_primitives(spec).map_err(|e| e.to_string())?.to_vec() {
            *m.entry(t.as_str().to_string()).or_default() += sign;
        }
    }
    m.retain(|_, v| *v != 0);
    Ok(m)
}

#[test]
fn seed_counting() {
    let outcome = (|| {
        let cat = FeatureCatalog::builtin();
        let w = WeightTable::builtin(&cat);
        let seeds = builtin_seeds();
        let t = Instant::now();
        let out = seed_augment(&seeds, &cat, &w, 8, &EnumerationBounds::default(), 1).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        let ids: BTreeSet<_> = out.pairs.iter().map(|p| p.id.as_str()).collect();
        let want = seeds.len() * 8 * 7 / 2;
        if seeds.len() != 10 || out.pairs.len() != 280 || want != 280 || ids.len() != 280 {
            return Err(format!("{} seeds gave {} pairs ({} distinct ids)", seeds.len(), out.pairs.len(), ids.len()));
        }
        if secs >= 60.0 {
            return Err(format!("280 pairs but took {secs:.1}s"));
        }
        Ok(format!("10 seeds x C(8,2) = 280 pairs in {secs:.1}s"))
    })();
    report("seed-counting", outcome);
}

#[test]
fn seed_self_compliance() {
    let outcome = (|| {
        let cat = FeatureCatalog::builtin();
        let w = WeightTable::builtin(&cat);
        let out = seed_augment(&builtin_seeds(), &cat, &w, 8, &EnumerationBounds::default(), 1)
            .map_err(|e| e.to_string())?;
        let mut ok = 0;
        for p in &out.pairs {
            let (cl, cr) = (own_cost(&p.left, &cat, &w)?, own_cost(&p.right, &cat, &w)?);
            let fine = match p.label {
                Some(Label::Left) => cl < cr,
                Some(Label::Right) => cr < cl,
                _ => false,
            };
            if fine && p.label_provenance == LabelProvenance::SeedWeights {
                ok += 1;
            }
        }
        let scorer = WeightScorer::new(&cat, &w);
        let via_lib = accuracy(&out.pairs, &scorer, &[SliceKey::All]).map_err(|e| e.to_string())?;
        let lib_acc = via_lib.first().and_then(|s| s.accuracy).unwrap_or(0.0);
        if ok != out.pairs.len() || out.pairs.is_empty() || lib_acc != 1.0 {
            return Err(format!("{ok}/{} pairs compliant (library says {lib_acc})", out.pairs.len()));
        }
        Ok(format!("{ok}/{ok} seed pairs strictly ordered by their labeling weights"))
    })();
    report("seed-self-compliance", outcome);
}

#[test]
fn planted_model_recovery() {
    let outcome = (|| {
        let t = Instant::now();
        let kb = KnowledgeBase::builtin();
        let pool = planted::pool(&kb);
        let hidden = planted::hidden_weights(&kb.catalog, 42);
        let pairs = planted::planted_pairs(&pool, &kb.catalog, &hidden, 500, 1, false);
        let plan = make_splits(&pairs, 0.15, 5, 1).map_err(|e| e.to_string())?;
        let holdout: BTreeSet<&str> = plan.holdout.iter().map(String::as_str).collect();
        let (test, train_set): (Vec<DesignPair>, Vec<DesignPair>) =
            pairs.into_iter().partition(|p| holdout.contains(p.id.as_str()));
        let coeffs = fit_pairs(&train_set, &kb.catalog, ModelFamily::Logistic, &TrainConfig::default())
            .map_err(|e| e.to_string())?;
        let learned = coefficients_to_weights(&coeffs);
        let scorer = WeightScorer::new(&kb.catalog, &learned);
        let mut ok = 0;
        for p in &test {
            if compliance(p, &scorer).map_err(|e| e.to_string())?.compliant {
                ok += 1;
            }
        }
        let acc = ok as f64 / test.len() as f64;
        let secs = t.elapsed().as_secs_f64();
        let detail = format!("holdout compliance {acc:.3} ({ok}/{}) in {secs:.1}s", test.len());
        if acc >= 0.95 && secs < 30.0 {
            Ok(detail)
        } else {
            Err(detail)
        }
    })();
    report("planted-model-recovery", outcome);
}

#[test]
fn coefficient_conversion() {
    let outcome = (|| {
        let cases: [(f64, i64); 8] = [
            (1.223, 1223),
            (-0.712, -712),
            (0.0004, 1),
            (-0.0004, -1),
            (0.0001, 1),
            (-1e-9, -1),
            (0.0, 0),
            (0.0005, 1),
        ];
        let coefficients: BTreeMap<String, f64> = cases.iter().enumerate().map(|(i, (c, _))| (format!("f{i}"), *c)).collect();
        let model = ModelCoefficients {
            coefficients,
            intercept: 0.0,
            meta: TrainingMeta {
                family: ModelFamily::Logistic,
                epochs: 0,
                converged: true,
                seed: 0,
                lambda: 1e-3,
                tol: 1e-8,
                final_loss: 0.0,
                n_examples: 0,
                n_effective: 0,
            },
        };
        let w = coefficients_to_weights(&model);
        for (i, (c, want)) in cases.iter().enumerate() {
            let got = w.get(&format!("f{i}"));
            if got != Some(*want) {
                return Err(format!("{c} converted to {got:?}, expected {want}"));
            }
        }
        if w.provenance != WeightProvenance::Learned {
            return Err(format!("provenance {:?}", w.provenance));
        }
        Ok("1.223 -> 1223, -0.712 -> -712, |c| < 0.0005 clamps to sign(c)".into())
    })();
    report("coefficient-conversion", outcome);
}

/// 50 couples of completions that differ in two to four primitive tokens.
fn synthetic_corpus(kb: &KnowledgeBase) -> Result<Vec<DesignPair>, String> {
    let ds = Arc::new(
        Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 200).with_extent(1.0, 90.0),
            FieldDef::new("n", DataType::String, 6),
            FieldDef::new("t", DataType::Datetime, 50).with_extent(0.0, 1e6),
        ])
        .with_rows(200),
    );
    let en = Enumerator::new(kb);
    let pool = en
        .complete(&PartialSpec::new(ds, 1, 2), &EnumerationBounds::default())
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < 50 {
        let a = pool.choose(&mut rng).ok_or("empty pool")?;
        let near: Vec<&ChartSpec> = pool
            .iter()
            .filter(|b| {
                let d = token_delta(a, b).unwrap_or_default();
                let size: i64 = d.values().map(|v| v.abs()).sum();
                (2..=4).contains(&size)
            })
            .collect();
        let Some(b) = near.choose(&mut rng) else { continue };
        if !seen.insert((a.canonical_hash(), b.canonical_hash())) {
            continue;
        }
        let label = if rng.random_bool(0.5) { Label::Left } else { Label::Right };
        out.push(
            DesignPair::new(format!("syn-{}", out.len()), a.clone(), (*b).clone(), PairSource::Corpus)
                .map_err(|e| e.to_string())?
                .labeled(label, LabelProvenance::Manual),
        );
    }
    Ok(out)
}

#[test]
fn primitive_round_trip() {
    let outcome = (|| {
        let kb = KnowledgeBase::builtin();
        let corpus = synthetic_corpus(&kb)?;
        let en = Enumerator::new(&kb);
        let bounds = EnumerationBounds::default();
        let (mut emitted, mut productive, mut most) = (0, 0, 0);
        for (origin, result) in primitive_augment_corpus(&corpus, &en, DEFAULT_MAX_NEW, &bounds) {
            let pairs = result.map_err(|e| format!("{origin}: {e}"))?;
            let src = corpus.iter().find(|p| p.id == origin).ok_or("unknown origin")?;
            let want = token_delta(&src.left, &src.right)?;
            if pairs.len() > 7 {
                return Err(format!("{origin} produced {} pairs", pairs.len()));
            }
            for p in &pairs {
                if token_delta(&p.left, &p.right)? != want {
                    return Err(format!("{} does not reproduce the differences of {origin}", p.id));
                }
                let lineage = p.lineage.as_ref().and_then(|l| l.origin.as_deref());
                if lineage != Some(origin.as_str()) {
                    return Err(format!("{} has lineage {lineage:?}", p.id));
                }
            }
            emitted += pairs.len();
            most = most.max(pairs.len());
            productive += usize::from(!pairs.is_empty());
        }
        if emitted == 0 {
            return Err("no pairs emitted".into());
        }
        Ok(format!(
            "{emitted} pairs from {productive}/50 origins, all differences reproduced; at most {most} per origin"
        ))
    })();
    report("primitive-round-trip", outcome);
}

#[test]
fn unary_ablation_exactness() {
    let outcome = (|| {
        let kb = KnowledgeBase::builtin();
        let cat = &kb.catalog;
        // a feature is ablatable when one partial has designs with and without it
        let mut feasible: BTreeSet<String> = BTreeSet::new();
        for ds in micro_datasets() {
            for n in 1..=2 {
                let mut with: BTreeSet<&str> = BTreeSet::new();
                let mut without: BTreeSet<&str> = BTreeSet::new();
                for spec in enum_oracle::brute_force_specs(&ds, n).values() {
                    let fv = extract_features(spec, cat).map_err(|e| e.to_string())?;
                    for name in cat.names() {
                        if fv.get(name) >= 1 {
                            with.insert(name);
                        } else {
                            without.insert(name);
                        }
                    }
                }
                feasible.extend(with.intersection(&without).map(|s| s.to_string()));
            }
        }
        let en = Enumerator::new(&kb);
        let cache = CompletionCache::new(&en, micro_partials(), EnumerationBounds::default());
        let cfg = AblationConfig::default();
        let (mut pairs_total, mut infeasible) = (0, 0);
        for name in cat.names() {
            let r = feature_augment_unary(name, &cache, &cfg).map_err(|e| e.to_string())?;
            if r.feature != name {
                return Err(format!("asked for `{name}`, got `{}`", r.feature));
            }
            if feasible.contains(name) {
                if r.status != AblationStatus::Complete || r.pairs.len() != 7 {
                    return Err(format!("`{name}`: {:?} with {} pairs", r.status, r.pairs.len()));
                }
            } else {
                if r.status != AblationStatus::Infeasible || !r.pairs.is_empty() || r.warnings.is_empty() {
                    return Err(format!("`{name}` should be reported infeasible, got {:?}", r.status));
                }
                infeasible += 1;
            }
            for p in &r.pairs {
                let (l, rr) = (
                    extract_features(&p.left, cat).map_err(|e| e.to_string())?.get(name),
                    extract_features(&p.right, cat).map_err(|e| e.to_string())?.get(name),
                );
                let left_has = p.lineage.as_ref().and_then(|l| l.context.get(name)).copied();
                let ok = match left_has {
                    Some(true) => l >= 1 && rr == 0,
                    Some(false) => l == 0 && rr >= 1,
                    None => false,
                };
                if !ok {
                    return Err(format!("{}: counts ({l}, {rr}) with context {left_has:?}", p.id));
                }
            }
            pairs_total += r.pairs.len();
        }
        Ok(format!(
            "{} features reported: {} feasible x 7 = {pairs_total} pairs with counts (>=1, 0); {infeasible} infeasible as brute force predicts",
            cat.len(),
            feasible.len()
        ))
    })();
    report("unary-ablation-exactness", outcome);
}

#[test]
fn dependency_oracle() {
    let outcome = (|| {
        let names = [
            "encoding",
            "aggregate",
            "aggregate_mean",
            "bin",
            "bin_high",
            "log_x",
            "linear_x",
            "facet_row",
        ];
        let cat = FeatureCatalog::builtin().subset(&names).map_err(|e| e.to_string())?;
        let kb = KnowledgeBase::new(cat.clone(), WeightTable::builtin(&cat)).map_err(|e| e.to_string())?;
        let en = Enumerator::new(&kb);
        let probe = probe_set(&en, &micro_partials(), &EnumerationBounds::default(), &[]).map_err(|e| e.to_string())?;
        let graph = analyze_dependencies(&probe, &cat).map_err(|e| e.to_string())?;

        let mut specs: BTreeMap<String, ChartSpec> = BTreeMap::new();
        for ds in micro_datasets() {
            for n in 1..=2 {
                specs.extend(enum_oracle::brute_force_specs(&ds, n));
            }
        }
        let mut present: BTreeMap<&str, BTreeSet<&str>> = names.iter().map(|n| (*n, BTreeSet::new())).collect();
        for (h, spec) in &specs {
            let fv = extract_features(spec, &cat).map_err(|e| e.to_string())?;
            for n in names {
                if fv.get(n) > 0 {
                    present.get_mut(n).unwrap().insert(h.as_str());
                }
            }
        }
        let mut want: BTreeSet<(String, Relation, String)> = BTreeSet::new();
        let mut never: BTreeSet<String> = BTreeSet::new();
        for a in names {
            let pa = &present[a];
            if pa.is_empty() {
                never.insert(a.to_string());
                continue;
            }
            for b in names {
                let pb = &present[b];
                if a == b || pb.is_empty() {
                    continue;
                }
                if pa.iter().all(|h| pb.contains(h)) && pb.iter().any(|h| !pa.contains(h)) {
                    want.insert((a.into(), Relation::Provokes, b.into()));
                }
                if pa.iter().all(|h| !pb.contains(h)) {
                    want.insert((a.into(), Relation::Contradicts, b.into()));
                }
            }
        }
        let got: BTreeSet<(String, Relation, String)> =
            graph.edges.iter().map(|e| (e.a.clone(), e.relation, e.b.clone())).collect();
        if probe.len() != specs.len() {
            return Err(format!("probe set {} charts vs brute force {}", probe.len(), specs.len()));
        }
        if got != want || graph.undetermined != never {
            return Err(format!(
                "edges differ: missing {:?}, extra {:?}; undetermined {:?} vs {:?}",
                want.difference(&got).collect::<Vec<_>>(),
                got.difference(&want).collect::<Vec<_>>(),
                graph.undetermined,
                never
            ));
        }
        let named = [
            ("aggregate_mean", Relation::Provokes, "aggregate"),
            ("log_x", Relation::Contradicts, "linear_x"),
            ("linear_x", Relation::Contradicts, "log_x"),
        ];
        for (a, r, b) in named {
            if !want.contains(&(a.to_string(), r, b.to_string())) {
                return Err(format!("expected {a} {r:?} {b}"));
            }
        }
        Ok(format!(
            "{} edges over {} probe charts match the co-occurrence oracle, incl. aggregate_mean provokes aggregate and log_x contradicts linear_x",
            got.len(),
            probe.len()
        ))
    })();
    report("dependency-oracle", outcome);
}

fn random_examples(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<TrainExample> {
    (0..n)
        .map(|i| TrainExample {
            x: (0..d).map(|_| f64::from(rng.random_range(-3i32..=3))).collect(),
            y: if rng.random_bool(0.5) { 1 } else { -1 },
            pair_id: format!("e{i}"),
            orientation: Orientation::Original,
        })
        .collect()
}

#[test]
fn trainer_numerics() {
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 6;
        let base = random_examples(&mut rng, d, 80);
        let lambda = 1e-3;
        let (mut worst_fd, mut worst_quad): (f64, f64) = (0.0, 0.0);
        for _ in 0..100 {
            let p: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let (_, g) = loss_and_gradient(&base, &p, lambda);
            for j in 0..p.len() {
                let h = 1e-5;
                let (mut a, mut b) = (p.clone(), p.clone());
                a[j] += h;
                b[j] -= h;
                let fd = (loss_and_gradient(&base, &a, lambda).0 - loss_and_gradient(&base, &b, lambda).0) / (2.0 * h);
                worst_fd = worst_fd.max((fd - g[j]).abs() / g[j].abs().max(1e-3));
            }
            // an equal-labeled pair becomes four examples that must cancel
            let xq: Vec<f64> = (0..d).map(|_| f64::from(rng.random_range(-2i32..=2))).collect();
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
            let (_, gq) = loss_and_gradient(&with, &p, lambda);
            for (a, b) in g.iter().zip(&gq) {
                worst_quad = worst_quad.max((a - b).abs());
            }
        }
        let detail = format!("max relative FD error {worst_fd:.2e}; max gradient change from quadruples {worst_quad:.1e}");
        if worst_fd < 1e-5 && worst_quad <= 1e-12 {
            Ok(detail)
        } else {
            Err(detail)
        }
    })();
    report("trainer-numerics", outcome);
}

/// Costs looked up by canonical hash, plus a bonus for whichever design is
/// shown first.
struct TableScorer {
    costs: BTreeMap<String, i64>,
    first_bonus: i64,
}

impl Scorer for TableScorer {
    fn pair_costs(&self, first: &ChartSpec, second: &ChartSpec) -> Result<(i64, i64), EvalError> {
        let c = |s: &ChartSpec| self.costs[&s.canonical_hash()];
        Ok((c(first) + self.first_bonus, c(second)))
    }
}

#[test]
fn compliance_rules() {
    let outcome = (|| {
        let ds = Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 100).with_extent(1.0, 9.0),
            FieldDef::new("n", DataType::String, 5),
        ]));
        let a = parse("point: x=q, y=q", ds.clone()).map_err(|e| e.to_string())?;
        let b = parse("bar: x=n, y=q:mean", ds).map_err(|e| e.to_string())?;
        // (label, cost of left, cost of right, first bonus, compliant, rule)
        let table = [
            (Label::Left, 3, 7, 0, true, Rule::StrictOrder),
            (Label::Left, 7, 3, 0, false, Rule::StrictOrder),
            (Label::Right, 7, 3, 0, true, Rule::StrictOrder),
            (Label::Right, 3, 7, 0, false, Rule::StrictOrder),
            (Label::Left, 5, 5, 0, false, Rule::StrictOrder),
            (Label::Right, 5, 5, 0, false, Rule::StrictOrder),
            (Label::Equal, 5, 5, 0, true, Rule::NearTie),
            (Label::Equal, 5, 7, 0, true, Rule::NearTie),
            (Label::Equal, 7, 5, 0, true, Rule::NearTie),
            (Label::Equal, 5, 8, 0, false, Rule::NearTie),
            (Label::Equal, 8, 5, 0, false, Rule::NearTie),
            (Label::Left, 5, 6, 2, false, Rule::DuplicateInconsistent),
            (Label::Equal, 5, 7, 2, false, Rule::DuplicateInconsistent),
            (Label::Left, 1, 9, 2, true, Rule::StrictOrder),
        ];
        for (i, (label, cl, cr, bonus, compliant, rule)) in table.into_iter().enumerate() {
            let scorer = TableScorer {
                costs: [(a.canonical_hash(), cl), (b.canonical_hash(), cr)].into(),
                first_bonus: bonus,
            };
            let pair = DesignPair::new(format!("row{i}"), a.clone(), b.clone(), PairSource::Corpus)
                .map_err(|e| e.to_string())?
                .labeled(label, LabelProvenance::Manual);
            let r = compliance(&pair, &scorer).map_err(|e| e.to_string())?;
            if r.compliant != compliant || r.rule_applied != rule || r.cost_left != cl + bonus || r.cost_right != cr {
                return Err(format!("row {i} ({label:?}, {cl}, {cr}, bonus {bonus}): got {r:?}"));
            }
        }
        Ok(format!("{} rows: strict order, |d|=2 tie ok, |d|=3 not, equal costs fail strict labels, orientation disagreement", table.len()))
    })();
    report("compliance-rules", outcome);
}

#[test]
fn split_integrity() {
    let outcome = (|| {
        let kb = KnowledgeBase::builtin();
        let pool = planted::pool(&kb);
        let hidden = planted::hidden_weights(&kb.catalog, 3);
        let mut pairs = planted::planted_pairs(&pool, &kb.catalog, &hidden, 786, 9, false);
        for (i, p) in pairs.iter_mut().enumerate() {
            if i % 5 == 0 {
                p.label = Some(Label::Equal);
            }
            p.group = Some(["a", "b", "c"][i % 3].to_string());
        }
        let plan = make_splits(&pairs, 0.15, 5, 1).map_err(|e| e.to_string())?;
        if plan.holdout.len() != 118 {
            return Err(format!("holdout {}", plan.holdout.len()));
        }
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        if sizes.len() != 5 || sizes.iter().max().unwrap() - sizes.iter().min().unwrap() > 1 {
            return Err(format!("fold sizes {sizes:?}"));
        }
        // every pair id lands in exactly one cell
        let mut cell_of: BTreeMap<&str, usize> = BTreeMap::new();
        for (c, ids) in std::iter::once(&plan.holdout).chain(&plan.folds).enumerate() {
            for id in ids {
                if cell_of.insert(id.as_str(), c).is_some() {
                    return Err(format!("`{id}` appears in two cells"));
                }
            }
        }
        if cell_of.len() != pairs.len() {
            return Err(format!("{} of {} pairs assigned", cell_of.len(), pairs.len()));
        }
        // all orientation and neutralization examples follow their pair
        let mut per_cell: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); 6];
        for p in &pairs {
            let c = cell_of[p.id.as_str()];
            for e in pair_to_examples(p, &kb.catalog).map_err(|e| e.to_string())? {
                *per_cell[c].entry(e.pair_id).or_default() += 1;
            }
        }
        let mut examples = 0;
        for p in &pairs {
            let want = if p.label == Some(Label::Equal) { 4 } else { 2 };
            let holders: Vec<usize> = (0..6).filter(|&c| per_cell[c].contains_key(&p.id)).collect();
            if holders.len() != 1 || per_cell[holders[0]][&p.id] != want {
                return Err(format!("examples of `{}` spread over cells {holders:?}", p.id));
            }
            examples += want;
        }
        Ok(format!("786 pairs -> holdout 118, folds {sizes:?}; {examples} examples co-located with their pairs"))
    })();
    report("split-integrity", outcome);
}
