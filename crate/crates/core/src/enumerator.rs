//! Completion of partial specifications by generate-with-pruning over an
//! explicit choice grammar.
//!
//! Choice points per layer: mark type, a set of channels, an injective
//! assignment of fields (plus the count sentinel) to those channels, and an
//! aggregate/bin option per encoding. Then one scale type per used channel,
//! then an optional facet. Hard constraints that can be decided early (H4,
//! H5, H6, scale compatibility) are pruned while generating; every survivor
//! is still re-checked against the full rule set.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{KbError, SpecError};
use crate::kb::primitives::tokens_of;
use crate::kb::validate::{scale_conflict, violations};
use crate::kb::view::EncView;
use crate::kb::*;

/// Bin counts offered for number fields.
pub const BIN_CHOICES: [u32; 2] = [10, 25];
/// Bin count offered for number facets.
pub const FACET_BIN: u32 = 10;

/// A piece of design that every completion must contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fragment {
    /// A primitive token such as `y.log` or `mark.line`.
    Token { token: PrimitiveToken },
    /// A field that must be encoded or faceted on.
    Field { field: String },
}

impl Fragment {
    pub fn token(t: &str) -> Self {
        Fragment::Token {
            token: PrimitiveToken::new(t),
        }
    }

    pub fn field(name: &str) -> Self {
        Fragment::Field {
            field: name.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EncodingCount {
    Uniform(usize),
    PerLayer(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSpec {
    pub dataset: Arc<Dataset>,
    #[serde(default)]
    pub fixed: Vec<Fragment>,
    /// Unset means cartesian.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Coordinates>,
    pub layer_count: usize,
    pub encoding_count: EncodingCount,
}

impl PartialSpec {
    pub fn new(dataset: Arc<Dataset>, layer_count: usize, encodings: usize) -> Self {
        Self {
            dataset,
            fixed: Vec::new(),
            coordinates: None,
            layer_count,
            encoding_count: EncodingCount::Uniform(encodings),
        }
    }

    pub fn with_shape(dataset: Arc<Dataset>, shape: Vec<usize>) -> Self {
        Self {
            dataset,
            fixed: Vec::new(),
            coordinates: None,
            layer_count: shape.len(),
            encoding_count: EncodingCount::PerLayer(shape),
        }
    }

    pub fn fix(mut self, fragment: Fragment) -> Self {
        self.fixed.push(fragment);
        self
    }

    pub fn with_coordinates(mut self, c: Coordinates) -> Self {
        self.coordinates = Some(c);
        self
    }

    /// Encoding count per layer.
    pub fn shape(&self) -> Result<Vec<usize>, EnumerateError> {
        let shape = match &self.encoding_count {
            EncodingCount::Uniform(n) => vec![*n; self.layer_count],
            EncodingCount::PerLayer(v) => v.clone(),
        };
        if shape.len() != self.layer_count {
            return Err(EnumerateError::Malformed(format!(
                "{} layers but {} encoding counts",
                self.layer_count,
                shape.len()
            )));
        }
        if self.layer_count == 0 || self.layer_count > MAX_LAYERS {
            return Err(EnumerateError::Malformed(format!(
                "layer count {} outside 1..={MAX_LAYERS}",
                self.layer_count
            )));
        }
        if let Some(&n) = shape.iter().find(|&&n| n == 0 || n > MAX_ENCODINGS) {
            return Err(EnumerateError::Malformed(format!(
                "encoding count {n} outside 1..={MAX_ENCODINGS}"
            )));
        }
        Ok(shape)
    }

    fn check(&self) -> Result<Vec<usize>, EnumerateError> {
        self.dataset.check().map_err(KbError::from)?;
        let shape = self.shape()?;
        let mut scale_tokens: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for f in &self.fixed {
            match f {
                Fragment::Field { field } => {
                    if self.dataset.field(field).is_none() {
                        return Err(KbError::from(SpecError::UnknownField(field.clone())).into());
                    }
                }
                Fragment::Token { token } => {
                    let parts: Vec<&str> = token.as_str().split('.').collect();
                    if let [ch, s] = parts[..] {
                        // `categorical` doubles as the nominal type token
                        if ScaleType::parse(s).is_some_and(|t| t != ScaleType::Categorical) {
                            scale_tokens.entry(ch).or_default().insert(s);
                        }
                    }
                }
            }
        }
        if let Some((ch, _)) = scale_tokens.iter().find(|(_, s)| s.len() > 1) {
            return Err(EnumerateError::Malformed(format!(
                "fixed fragments give channel {ch} two scale types"
            )));
        }
        Ok(shape)
    }

    fn required_tokens(&self) -> TokenBag {
        self.fixed
            .iter()
            .filter_map(|f| match f {
                Fragment::Token { token } => Some(token.clone()),
                Fragment::Field { .. } => None,
            })
            .collect()
    }

    fn required_fields(&self) -> BTreeSet<&str> {
        self.fixed
            .iter()
            .filter_map(|f| match f {
                Fragment::Field { field } => Some(field.as_str()),
                Fragment::Token { .. } => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultOrder {
    /// Canonical design order.
    #[default]
    Canonical,
    /// Ascending cost, canonical order within a cost level.
    Cost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnumerationBounds {
    pub max_results: usize,
    /// Cap on total feature occurrences per chart.
    pub max_feature_count: Option<u64>,
    pub cost_cap: Option<i64>,
    /// Candidate designs examined before giving up.
    pub node_cap: u64,
    /// Which designs survive when `max_results` truncates.
    pub order: ResultOrder,
}

impl Default for EnumerationBounds {
    fn default() -> Self {
        Self {
            max_results: 100_000,
            max_feature_count: None,
            cost_cap: None,
            node_cap: 2_000_000,
            order: ResultOrder::Canonical,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnumerateError {
    #[error("enumeration budget exceeded: more than {cap} candidates")]
    BudgetExceeded { cap: u64 },
    #[error("malformed partial spec: {0}")]
    Malformed(String),
    #[error("features both forced and forbidden: {0:?}")]
    ForceForbidOverlap(Vec<String>),
    #[error("bounds: {0}")]
    Bounds(String),
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// A completion with its dense feature counts (catalog order).
#[derive(Debug, Clone)]
pub struct Completion {
    pub spec: ChartSpec,
    pub counts: Vec<u32>,
    pub cost: Option<i64>,
    pub key: CanonicalKey,
}

pub struct Enumerator<'a> {
    kb: &'a KnowledgeBase,
    dense_weights: Option<Vec<i64>>,
}

type Filter<'f> = &'f dyn Fn(&[u32]) -> bool;

impl<'a> Enumerator<'a> {
    pub fn new(kb: &'a KnowledgeBase) -> Self {
        let dense_weights = kb
            .catalog
            .names()
            .map(|n| kb.weights.get(n))
            .collect::<Option<Vec<_>>>();
        Self { kb, dense_weights }
    }

    pub fn catalog(&self) -> &FeatureCatalog {
        &self.kb.catalog
    }

    /// All valid completions of `partial`, deduplicated, in bound order.
    pub fn complete(
        &self,
        partial: &PartialSpec,
        bounds: &EnumerationBounds,
    ) -> Result<Vec<ChartSpec>, EnumerateError> {
        Ok(self
            .completions(partial, bounds, None)?
            .into_iter()
            .map(|c| c.spec)
            .collect())
    }

    /// Completions where every forced feature is present and every forbidden
    /// one absent.
    pub fn enumerate_constrained(
        &self,
        partial: &PartialSpec,
        force: &BTreeSet<String>,
        forbid: &BTreeSet<String>,
        bounds: &EnumerationBounds,
    ) -> Result<Vec<ChartSpec>, EnumerateError> {
        Ok(self
            .constrained_completions(partial, force, forbid, bounds)?
            .into_iter()
            .map(|c| c.spec)
            .collect())
    }

    pub fn constrained_completions(
        &self,
        partial: &PartialSpec,
        force: &BTreeSet<String>,
        forbid: &BTreeSet<String>,
        bounds: &EnumerationBounds,
    ) -> Result<Vec<Completion>, EnumerateError> {
        let overlap: Vec<String> = force.intersection(forbid).cloned().collect();
        if !overlap.is_empty() {
            return Err(EnumerateError::ForceForbidOverlap(overlap));
        }
        let index = |names: &BTreeSet<String>| -> Result<Vec<usize>, EnumerateError> {
            names
                .iter()
                .map(|n| {
                    self.kb
                        .catalog
                        .position(n)
                        .ok_or_else(|| KbError::UnknownFeature(n.clone()).into())
                })
                .collect()
        };
        let (f, b) = (index(force)?, index(forbid)?);
        let filter = move |c: &[u32]| f.iter().all(|&i| c[i] > 0) && b.iter().all(|&i| c[i] == 0);
        self.completions(partial, bounds, Some(&filter))
    }

    /// Core search. `filter` runs on dense counts before truncation.
    pub fn completions(
        &self,
        partial: &PartialSpec,
        bounds: &EnumerationBounds,
        filter: Option<Filter<'_>>,
    ) -> Result<Vec<Completion>, EnumerateError> {
        if bounds.max_results == 0 {
            return Err(EnumerateError::Bounds("max_results must be at least 1".into()));
        }
        let needs_cost = bounds.cost_cap.is_some() || bounds.order == ResultOrder::Cost;
        if needs_cost && self.dense_weights.is_none() {
            let missing = self
                .kb
                .catalog
                .names()
                .find(|n| self.kb.weights.get(n).is_none())
                .unwrap_or_default();
            return Err(KbError::MissingWeight(missing.to_string()).into());
        }
        let shape = partial.check()?;
        let search = Search::new(partial, shape);
        let required_tokens = partial.required_tokens();
        let required_fields = partial.required_fields();

        let mut nodes = 0u64;
        // bounded best-first retention keyed by the output order
        let mut found: BTreeMap<(Option<i64>, CanonicalKey), Completion> = BTreeMap::new();
        let by_cost = bounds.order == ResultOrder::Cost;
        let mut visit = |spec: ChartSpec| -> Result<(), EnumerateError> {
            nodes += 1;
            if nodes > bounds.node_cap {
                return Err(EnumerateError::BudgetExceeded {
                    cap: bounds.node_cap,
                });
            }
            if !uses_fields(&spec, &required_fields) {
                return Ok(());
            }
            let Ok(view) = ChartView::new(&spec) else {
                return Ok(());
            };
            if !violations(&view).is_empty() {
                return Ok(());
            }
            if !required_tokens.is_empty() && !tokens_of(&view).contains_all(&required_tokens) {
                return Ok(());
            }
            let counts = self.kb.catalog.dense_counts(&view);
            drop(view);
            if let Some(cap) = bounds.max_feature_count {
                if counts.iter().map(|&c| u64::from(c)).sum::<u64>() > cap {
                    return Ok(());
                }
            }
            let cost = self.dense_weights.as_ref().map(|w| {
                w.iter()
                    .zip(&counts)
                    .map(|(w, &c)| w * i64::from(c))
                    .sum::<i64>()
            });
            if let (Some(cap), Some(c)) = (bounds.cost_cap, cost) {
                if c > cap {
                    return Ok(());
                }
            }
            if let Some(f) = filter {
                if !f(&counts) {
                    return Ok(());
                }
            }
            let spec = spec.canonical();
            let key = spec.canonical_key();
            let slot = (if by_cost { cost } else { None }, key.clone());
            if found.len() == bounds.max_results {
                match found.last_key_value() {
                    Some((last, _)) if *last > slot => {}
                    _ => return Ok(()),
                }
            }
            found.entry(slot).or_insert(Completion {
                spec,
                counts,
                cost,
                key,
            });
            if found.len() > bounds.max_results {
                found.pop_last();
            }
            Ok(())
        };
        search.run(&mut visit)?;

        Ok(found.into_values().collect())
    }
}

fn uses_fields(spec: &ChartSpec, required: &BTreeSet<&str>) -> bool {
    required.iter().all(|&name| {
        spec.facet.as_ref().is_some_and(|f| f.field == name)
            || spec
                .marks
                .iter()
                .any(|m| m.encodings.iter().any(|e| e.field.name() == name))
    })
}

/// Lowest-cost representative of each of the `k` smallest distinct costs,
/// ties broken canonically.
pub fn top_k_distinct_cost(
    specs: &[ChartSpec],
    w: &WeightTable,
    catalog: &FeatureCatalog,
    k: usize,
) -> Result<Vec<ChartSpec>, KbError> {
    let mut scored = specs
        .iter()
        .map(|s| {
            let c = w.cost(&extract_features(s, catalog)?)?;
            Ok((c, s.canonical_key(), s))
        })
        .collect::<Result<Vec<_>, KbError>>()?;
    scored.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    let mut out: Vec<ChartSpec> = Vec::new();
    let mut last = None;
    for (c, _, s) in scored {
        if out.len() == k {
            break;
        }
        if last != Some(c) {
            out.push(s.clone());
            last = Some(c);
        }
    }
    Ok(out)
}

/// Per-encoding (aggregate, bin) choices for a field.
fn encoding_options(field: &FieldRef, ds: &Dataset) -> Vec<(Aggregate, Option<u32>)> {
    match field {
        FieldRef::Count => vec![(Aggregate::Count, None)],
        FieldRef::Field(name) => match ds.field(name).map(|f| f.dtype) {
            Some(DataType::Number) => {
                let mut v = vec![
                    (Aggregate::None, None),
                    (Aggregate::Mean, None),
                    (Aggregate::Sum, None),
                ];
                v.extend(BIN_CHOICES.iter().map(|&b| (Aggregate::None, Some(b))));
                v
            }
            _ => vec![(Aggregate::None, None)],
        },
    }
}

struct Search<'p> {
    partial: &'p PartialSpec,
    shape: Vec<usize>,
    refs: Vec<FieldRef>,
    facets: Vec<Option<Facet>>,
    mark_tokens: BTreeMap<MarkType, u32>,
}

impl<'p> Search<'p> {
    fn new(partial: &'p PartialSpec, shape: Vec<usize>) -> Self {
        let ds = &partial.dataset;
        let mut refs: Vec<FieldRef> = ds
            .fields
            .iter()
            .map(|f| FieldRef::field(f.name.clone()))
            .collect();
        refs.push(FieldRef::Count);

        let mut facets = vec![None];
        for direction in [FacetDirection::Row, FacetDirection::Col] {
            for f in &ds.fields {
                let bin = match f.dtype {
                    DataType::String | DataType::Boolean => None,
                    DataType::Number => Some(FACET_BIN),
                    DataType::Datetime => continue,
                };
                facets.push(Some(Facet {
                    direction,
                    field: f.name.clone(),
                    bin,
                }));
            }
        }

        let mut mark_tokens = BTreeMap::new();
        for (t, n) in partial.required_tokens().iter() {
            if let Some(m) = t.as_str().strip_prefix("mark.").and_then(MarkType::parse) {
                mark_tokens.insert(m, n);
            }
        }
        Self {
            partial,
            shape,
            refs,
            facets,
            mark_tokens,
        }
    }

    /// Single-layer candidates with `n` encodings, H4-H6 pruned by construction.
    fn layers(&self, n: usize) -> Vec<Mark> {
        let ds = &self.partial.dataset;
        let mut out = Vec::new();
        for mark in MarkType::ALL {
            for channels in combinations(&Channel::ALL, n) {
                if mark.needs_position() && !channels.iter().any(|c| c.is_positional()) {
                    continue;
                }
                for fields in injections(&self.refs, n) {
                    let options: Vec<_> = fields.iter().map(|f| encoding_options(f, ds)).collect();
                    for pick in product(&options.iter().map(Vec::len).collect::<Vec<_>>()) {
                        let encodings = channels
                            .iter()
                            .zip(&fields)
                            .zip(&pick)
                            .enumerate()
                            .map(|(i, ((&ch, f), &j))| {
                                let (aggregate, bin) = options[i][j];
                                Encoding {
                                    channel: ch,
                                    field: f.clone(),
                                    aggregate,
                                    bin,
                                    stack: Stack::None,
                                }
                            })
                            .collect();
                        out.push(Mark::new(mark, encodings));
                    }
                }
            }
        }
        out
    }

    fn run(
        &self,
        visit: &mut dyn FnMut(ChartSpec) -> Result<(), EnumerateError>,
    ) -> Result<(), EnumerateError> {
        let per_count: BTreeMap<usize, Vec<Mark>> = self
            .shape
            .iter()
            .map(|&n| (n, self.layers(n)))
            .collect();
        let ds = &self.partial.dataset;
        let coordinates = self.partial.coordinates.unwrap_or_default();

        let mut stack: Vec<usize> = Vec::new();
        let mut on_layers = |idx: &[usize]| -> Result<(), EnumerateError> {
            let marks: Vec<Mark> = idx
                .iter()
                .zip(&self.shape)
                .map(|(&i, n)| per_count[n][i].clone())
                .collect();
            if !self.marks_possible(&marks) {
                return Ok(());
            }
            let channels: BTreeSet<Channel> = marks
                .iter()
                .flat_map(|m| m.encodings.iter().map(|e| e.channel))
                .collect();
            let mut choices: Vec<(Channel, Vec<ScaleType>)> = Vec::new();
            for &ch in &channels {
                let allowed: Vec<ScaleType> = ScaleType::ALL
                    .into_iter()
                    .filter(|&s| {
                        marks.iter().flat_map(|m| &m.encodings).filter(|e| e.channel == ch).all(
                            |e| {
                                let field = match &e.field {
                                    FieldRef::Count => None,
                                    FieldRef::Field(n) => ds.field(n),
                                };
                                let ev = EncView {
                                    enc: e,
                                    field,
                                    scale: None,
                                };
                                scale_conflict(s, &ev).is_none()
                            },
                        )
                    })
                    .collect();
                if allowed.is_empty() {
                    return Ok(());
                }
                choices.push((ch, allowed));
            }
            let sizes: Vec<usize> = choices.iter().map(|c| c.1.len()).collect();
            for pick in product(&sizes) {
                let scales: Vec<Scale> = choices
                    .iter()
                    .zip(&pick)
                    .map(|((ch, types), &j)| Scale::new(*ch, types[j]))
                    .collect();
                for facet in &self.facets {
                    // a faceted field is not also encoded
                    if let Some(f) = facet {
                        if marks
                            .iter()
                            .any(|m| m.encodings.iter().any(|e| e.field.name() == f.field))
                        {
                            continue;
                        }
                    }
                    let spec = ChartSpec {
                        dataset: Arc::clone(ds),
                        coordinates,
                        marks: marks.clone(),
                        scales: scales.clone(),
                        facet: facet.clone(),
                    };
                    visit(spec)?;
                }
            }
            Ok(())
        };
        self.layer_tuples(&per_count, &mut stack, &mut on_layers)
    }

    /// Layer index tuples; equal-sized layers are chosen in non-decreasing
    /// index order since layer order is not significant.
    fn layer_tuples(
        &self,
        per_count: &BTreeMap<usize, Vec<Mark>>,
        stack: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> Result<(), EnumerateError>,
    ) -> Result<(), EnumerateError> {
        let depth = stack.len();
        if depth == self.shape.len() {
            return f(stack);
        }
        let n = self.shape[depth];
        let start = match depth {
            0 => 0,
            _ if self.shape[depth - 1] == n => stack[depth - 1],
            _ => 0,
        };
        for i in start..per_count[&n].len() {
            stack.push(i);
            self.layer_tuples(per_count, stack, f)?;
            stack.pop();
        }
        Ok(())
    }

    fn marks_possible(&self, marks: &[Mark]) -> bool {
        self.mark_tokens
            .iter()
            .all(|(m, &n)| marks.iter().filter(|x| x.mark == *m).count() as u32 >= n)
    }
}

/// Increasing-index k-subsets of `items`.
fn combinations<T: Copy>(items: &[T], k: usize) -> Vec<Vec<T>> {
    fn go<T: Copy>(items: &[T], k: usize, from: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Ordered k-tuples of distinct items.
fn injections<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    fn go<T: Clone>(items: &[T], k: usize, used: &mut Vec<bool>, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                cur.push(items[i].clone());
                go(items, k, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(items, k, &mut vec![false; items.len()], &mut Vec::new(), &mut out);
    out
}

/// Mixed-radix counter over `sizes`.
fn product(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}
