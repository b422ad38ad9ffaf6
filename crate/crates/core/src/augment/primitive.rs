use std::collections::{BTreeSet, HashMap};

use super::diff::spec_difference;
use super::{extract_design_differences, AugmentError, DesignPair, Lineage, PairSource};
use crate::enumerator::{EnumerationBounds, Enumerator, Fragment, PartialSpec};
use crate::kb::{abstract_primitives, ChartSpec, TokenBag};

pub const DEFAULT_MAX_NEW: usize = 7;

/// The partial spec a side is completed from: its data fields, layer shape,
/// coordinates and the tokens that make up its half of the difference.
fn side_partial(spec: &ChartSpec, tokens: &TokenBag) -> PartialSpec {
    let mut p = PartialSpec::with_shape(spec.dataset.clone(), spec.layer_shape());
    p.coordinates = Some(spec.coordinates);
    let fields: BTreeSet<&str> = spec
        .marks
        .iter()
        .flat_map(|m| m.encodings.iter())
        .filter_map(|e| match &e.field {
            crate::kb::FieldRef::Field(n) => Some(n.as_str()),
            crate::kb::FieldRef::Count => None,
        })
        .chain(spec.facet.as_ref().map(|f| f.field.as_str()))
        .collect();
    for f in fields {
        p.fixed.push(Fragment::field(f));
    }
    for t in tokens.to_vec() {
        p.fixed.push(Fragment::Token { token: t });
    }
    p
}

fn sorted_shape(spec: &ChartSpec) -> Vec<usize> {
    let mut s = spec.layer_shape();
    s.sort_unstable();
    s
}

/// New pairs that show exactly the origin's primitive differences and
/// nothing else. Left completions are visited in canonical order and each
/// right completion is used at most once.
pub fn primitive_augment(
    pair: &DesignPair,
    enumerator: &Enumerator<'_>,
    max_new: usize,
    bounds: &EnumerationBounds,
) -> Result<Vec<DesignPair>, AugmentError> {
    let diff = extract_design_differences(pair)?;
    let (dl, dr) = (diff.left_tokens(), diff.right_tokens());
    let lefts = enumerator.complete(&side_partial(&pair.left, &dl), bounds)?;
    let rights = enumerator.complete(&side_partial(&pair.right, &dr), bounds)?;

    let mut by_bag: HashMap<TokenBag, Vec<usize>> = HashMap::new();
    for (i, r) in rights.iter().enumerate() {
        by_bag.entry(abstract_primitives(r)?).or_default().push(i);
    }
    let origin = (pair.left.canonical_hash(), pair.right.canonical_hash());
    let (shape_l, shape_r) = (sorted_shape(&pair.left), sorted_shape(&pair.right));
    let mut used = vec![false; rights.len()];
    let mut out = Vec::new();
    for l in &lefts {
        if out.len() >= max_new {
            break;
        }
        if sorted_shape(l) != shape_l {
            continue;
        }
        let target = diff.apply(&abstract_primitives(l)?);
        let Some(candidates) = by_bag.get(&target) else {
            continue;
        };
        let lh = l.canonical_hash();
        for &i in candidates {
            let r = &rights[i];
            if used[i] || sorted_shape(r) != shape_r {
                continue;
            }
            if (lh.as_str(), r.canonical_hash().as_str()) == (origin.0.as_str(), origin.1.as_str()) {
                continue;
            }
            if spec_difference(l, r)? != diff {
                continue;
            }
            used[i] = true;
            let id = format!("{}~p{}", pair.id, out.len() + 1);
            let mut p = DesignPair::new(id, l.clone(), r.clone(), PairSource::PrimitiveAug)?;
            p.group = pair.group.clone();
            out.push(p.with_lineage(Lineage {
                origin: Some(pair.id.clone()),
                ..Default::default()
            }));
            break;
        }
    }
    Ok(out)
}

/// Runs [`primitive_augment`] over a corpus on all cores. Output order
/// follows input order.
pub fn primitive_augment_corpus(
    pairs: &[DesignPair],
    enumerator: &Enumerator<'_>,
    max_new: usize,
    bounds: &EnumerationBounds,
) -> Vec<(String, Result<Vec<DesignPair>, AugmentError>)> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    let chunk = pairs.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|p| (p.id.clone(), primitive_augment(p, enumerator, max_new, bounds)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("augmentation worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::shorthand::parse;
    use crate::kb::*;
    use std::sync::Arc;

    fn stocks() -> Arc<Dataset> {
        Arc::new(
            Dataset::new(vec![
                FieldDef::new("date", DataType::Datetime, 120).with_extent(0.0, 3e8),
                FieldDef::new("price", DataType::Number, 480).with_extent(1.5, 790.0),
                FieldDef::new("symbol", DataType::String, 5),
            ])
            .with_rows(560),
        )
    }

    #[test]
    fn stock_pair_gets_point_variant() {
        let kb = KnowledgeBase::builtin();
        let en = Enumerator::new(&kb);
        let pair = DesignPair::new(
            "fig",
            parse("line: x=date, y=price:log, color=symbol", stocks()).unwrap(),
            parse("line: x=date, y=price | row=symbol", stocks()).unwrap(),
            PairSource::Corpus,
        )
        .unwrap();
        let out = primitive_augment(&pair, &en, 7, &EnumerationBounds::default()).unwrap();
        assert!(!out.is_empty() && out.len() <= 7);
        let want = extract_design_differences(&pair).unwrap();
        for p in &out {
            assert_eq!(extract_design_differences(p).unwrap(), want);
            assert_eq!(p.lineage.as_ref().unwrap().origin.as_deref(), Some("fig"));
        }
        let point_l = parse("point: x=date, y=price:log, color=symbol", stocks()).unwrap();
        let point_r = parse("point: x=date, y=price | row=symbol", stocks()).unwrap();
        let hit = out.iter().any(|p| {
            p.left.canonical_hash() == point_l.canonical_hash()
                && p.right.canonical_hash() == point_r.canonical_hash()
        });
        let shown: Vec<_> = out.iter().map(|p| format!("{} || {}", p.left, p.right)).collect();
        assert!(hit, "{shown:#?}");
    }

    #[test]
    fn saturated_difference_yields_nothing() {
        let ds = Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 50).with_extent(1.0, 9.0),
            FieldDef::new("n", DataType::String, 4),
        ]));
        let kb = KnowledgeBase::builtin();
        let en = Enumerator::new(&kb);
        let pair = DesignPair::new(
            "sat",
            parse("tick: x=q:log", ds.clone()).unwrap(),
            parse("bar: y=n:ordinal", ds).unwrap(),
            PairSource::Corpus,
        )
        .unwrap();
        let out = primitive_augment(&pair, &en, 7, &EnumerationBounds::default()).unwrap();
        assert!(out.is_empty(), "{:?}", out.iter().map(|p| (p.left.to_string(), p.right.to_string())).collect::<Vec<_>>());
    }
}
