//! Soft-constraint feature catalog.
//!
//! Each feature is a named counting predicate over a resolved chart. The
//! built-in catalog covers the features the weight-learning pipeline is
//! evaluated on plus per-mark, per-channel and per-scale usage features that
//! keep the cost surface from collapsing onto a handful of values.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spec::*;
use super::view::{ChartView, EncView, LayerView};
use crate::error::KbError;

/// Bin counts at or above this trigger `bin_high`.
pub const BIN_HIGH_THRESHOLD: u32 = 12;

pub type Predicate = Arc<dyn Fn(&ChartView<'_>) -> u32 + Send + Sync>;

#[derive(Clone)]
pub struct FeatureDef {
    pub name: String,
    pub description: String,
    pub default_weight: i64,
    pub predicate: Predicate,
}

impl fmt::Debug for FeatureDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureDef")
            .field("name", &self.name)
            .field("default_weight", &self.default_weight)
            .finish_non_exhaustive()
    }
}

/// Exported form of a catalog entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub weight: i64,
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct FeatureCatalog {
    features: Vec<FeatureDef>,
    index: HashMap<String, usize>,
}

impl FeatureCatalog {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self, KbError> {
        let mut index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if index.insert(f.name.clone(), i).is_some() {
                return Err(KbError::Shorthand(format!("duplicate feature `{}`", f.name)));
            }
        }
        Ok(Self { features, index })
    }

    pub fn builtin() -> Self {
        Self::new(builtin_features()).expect("builtin feature names are unique")
    }

    /// Catalog restricted to `names`, in the given order.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, KbError> {
        let features = names
            .iter()
            .map(|n| {
                self.get(n.as_ref())
                    .cloned()
                    .ok_or_else(|| KbError::UnknownFeature(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(features)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureDef> {
        self.index.get(name).map(|&i| &self.features[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureDef> {
        self.features.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Counts for every feature, in catalog order.
    pub fn dense_counts(&self, view: &ChartView<'_>) -> Vec<u32> {
        self.features.iter().map(|f| (f.predicate)(view)).collect()
    }

    pub fn export(&self) -> Vec<CatalogEntry> {
        self.features
            .iter()
            .map(|f| CatalogEntry {
                name: f.name.clone(),
                weight: f.default_weight,
                description: f.description.clone(),
            })
            .collect()
    }

    pub fn default_weights(&self) -> BTreeMap<String, i64> {
        self.features
            .iter()
            .map(|f| (f.name.clone(), f.default_weight))
            .collect()
    }
}

fn def(
    name: impl Into<String>,
    weight: i64,
    description: impl Into<String>,
    predicate: impl Fn(&ChartView<'_>) -> u32 + Send + Sync + 'static,
) -> FeatureDef {
    FeatureDef {
        name: name.into(),
        description: description.into(),
        default_weight: weight,
        predicate: Arc::new(predicate),
    }
}

fn count_encodings(view: &ChartView<'_>, pred: impl Fn(&EncView<'_>) -> bool) -> u32 {
    view.encodings().filter(|e| pred(e)).count() as u32
}

fn count_layers(view: &ChartView<'_>, pred: impl Fn(&LayerView<'_>) -> bool) -> u32 {
    view.layers.iter().filter(|l| pred(l)).count() as u32
}

fn flag(b: bool) -> u32 {
    u32::from(b)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layout {
    ContinuousContinuous,
    ContinuousDiscrete { overlap: bool },
    DiscreteDiscrete,
}

fn layout(layer: &LayerView<'_>, rows: u64) -> Option<Layout> {
    let (x, y) = layer.positional()?;
    Some(match (x.is_continuous(), y.is_continuous()) {
        (true, true) => Layout::ContinuousContinuous,
        (false, false) => Layout::DiscreteDiscrete,
        _ => Layout::ContinuousDiscrete {
            overlap: layer.continuous_discrete(rows).unwrap_or(false),
        },
    })
}

fn builtin_features() -> Vec<FeatureDef> {
    let mut f = Vec::new();

    f.push(def("encoding", 2, "each encoding channel in use", |v| {
        count_encodings(v, |_| true)
    }));

    let mark_weights = [
        (MarkType::Point, 0),
        (MarkType::Bar, 2),
        (MarkType::Line, 4),
        (MarkType::Area, 6),
        (MarkType::Tick, 5),
        (MarkType::Rect, 8),
    ];
    for (mark, w) in mark_weights {
        f.push(def(
            format!("mark_{}", mark.as_str()),
            w,
            format!("a {} mark layer", mark.as_str()),
            move |v| count_layers(v, |l| l.mark == mark),
        ));
    }

    let channel_weights = [
        (Channel::X, 0),
        (Channel::Y, 1),
        (Channel::Color, 6),
        (Channel::Size, 10),
        (Channel::Shape, 12),
        (Channel::Text, 15),
    ];
    for (channel, w) in channel_weights {
        f.push(def(
            format!("enc_{}", channel.as_str()),
            w,
            format!("an encoding on the {channel} channel"),
            move |v| count_encodings(v, |e| e.channel() == channel),
        ));
    }

    let scale_weights = [
        ("linear_x", Channel::X, ScaleType::Linear, 0),
        ("linear_y", Channel::Y, ScaleType::Linear, 0),
        ("log_x", Channel::X, ScaleType::Log, 4),
        ("log_y", Channel::Y, ScaleType::Log, 4),
        ("linear_color", Channel::Color, ScaleType::Linear, 3),
        ("log_color", Channel::Color, ScaleType::Log, 8),
        ("linear_size", Channel::Size, ScaleType::Linear, 2),
        ("log_size", Channel::Size, ScaleType::Log, 6),
        ("ordinal_x", Channel::X, ScaleType::Ordinal, 2),
        ("ordinal_y", Channel::Y, ScaleType::Ordinal, 3),
        ("categorical_x", Channel::X, ScaleType::Categorical, 1),
        ("categorical_y", Channel::Y, ScaleType::Categorical, 2),
        ("ordinal_color", Channel::Color, ScaleType::Ordinal, 4),
        ("categorical_color", Channel::Color, ScaleType::Categorical, 2),
    ];
    for (name, channel, scale, w) in scale_weights {
        f.push(def(
            name,
            w,
            format!("a {} scale on {channel}", scale.as_str()),
            move |v| flag(v.scale_is(channel, scale)),
        ));
    }

    f.push(def("aggregate", 1, "any aggregated encoding", |v| {
        count_encodings(v, |e| e.is_aggregated())
    }));
    for (agg, w) in [
        (Aggregate::Count, 0),
        (Aggregate::Mean, 2),
        (Aggregate::Sum, 3),
    ] {
        f.push(def(
            format!("aggregate_{}", agg.as_str()),
            w,
            format!("a {} aggregate", agg.as_str()),
            move |v| count_encodings(v, |e| e.enc.aggregate == agg),
        ));
    }

    f.push(def("bin", 2, "a binned encoding", |v| {
        count_encodings(v, |e| e.enc.bin.is_some())
    }));
    f.push(def("bin_low", 3, "binning with fewer than 12 bins", |v| {
        count_encodings(v, |e| e.enc.bin.is_some_and(|b| b < BIN_HIGH_THRESHOLD))
    }));
    f.push(def("bin_high", 10, "binning with 12 or more bins", |v| {
        count_encodings(v, |e| e.enc.bin.is_some_and(|b| b >= BIN_HIGH_THRESHOLD))
    }));

    let pair_layouts: [(&str, i64, MarkType, Layout); 4] = [
        ("c_c_point", -5, MarkType::Point, Layout::ContinuousContinuous),
        ("c_c_line", 12, MarkType::Line, Layout::ContinuousContinuous),
        ("d_d_rect", 6, MarkType::Rect, Layout::DiscreteDiscrete),
        ("d_d_point", 14, MarkType::Point, Layout::DiscreteDiscrete),
    ];
    for (name, w, mark, want) in pair_layouts {
        f.push(def(
            name,
            w,
            format!("{} mark over a {name} position pair", mark.as_str()),
            move |v| count_layers(v, |l| l.mark == mark && layout(l, v.rows) == Some(want)),
        ));
    }

    let cd_weights = [
        (MarkType::Point, 4, 16),
        (MarkType::Bar, -4, 30),
        (MarkType::Line, 10, 35),
        (MarkType::Area, 12, 40),
        (MarkType::Tick, 6, 14),
    ];
    for (mark, no_overlap_w, overlap_w) in cd_weights {
        for (overlap, w) in [(false, no_overlap_w), (true, overlap_w)] {
            let name = format!(
                "c_d_{}{}",
                if overlap { "overlap_" } else { "no_overlap_" },
                mark.as_str()
            );
            let description = format!(
                "{} mark with one continuous and one discrete position channel{}",
                mark.as_str(),
                if overlap { ", overlapping" } else { ", no overlap" }
            );
            f.push(def(name, w, description, move |v| {
                count_layers(v, |l| {
                    l.mark == mark
                        && layout(l, v.rows) == Some(Layout::ContinuousDiscrete { overlap })
                })
            }));
        }
    }

    for (channel, w) in [(Channel::X, -1), (Channel::Y, -1), (Channel::Color, 5)] {
        f.push(def(
            format!("value_continuous_{channel}"),
            w,
            format!("continuous values on {channel}"),
            move |v| count_encodings(v, |e| e.channel() == channel && e.is_continuous()),
        ));
    }
    for (channel, w) in [(Channel::X, 1), (Channel::Y, 2)] {
        f.push(def(
            format!("value_discrete_{channel}"),
            w,
            format!("discrete values on {channel}"),
            move |v| count_encodings(v, |e| e.channel() == channel && e.is_discrete()),
        ));
    }

    for (channel, w) in [(Channel::X, -2), (Channel::Y, -1), (Channel::Color, 3)] {
        f.push(def(
            format!("interesting_{channel}"),
            w,
            format!("the field of interest on {channel}"),
            move |v| count_encodings(v, |e| e.channel() == channel && e.is_interesting()),
        ));
    }

    f.push(def("facet_row", 8, "row faceting", |v| {
        flag(v.facet_direction() == Some(FacetDirection::Row))
    }));
    f.push(def("facet_col", 6, "column faceting", |v| {
        flag(v.facet_direction() == Some(FacetDirection::Col))
    }));
    let facet_channels = [
        ("x_row", Channel::X, FacetDirection::Row, 2),
        ("y_row", Channel::Y, FacetDirection::Row, 3),
        ("x_col", Channel::X, FacetDirection::Col, 3),
        ("y_col", Channel::Y, FacetDirection::Col, 2),
    ];
    for (name, channel, dir, w) in facet_channels {
        f.push(def(
            name,
            w,
            format!("{channel} channel combined with {} facets", dir.as_str()),
            move |v| flag(v.facet_direction() == Some(dir) && v.uses(channel)),
        ));
    }

    f.push(def(
        "horizontal_scrolling_x",
        20,
        "high-cardinality nominal field on x",
        |v| count_encodings(v, |e| e.channel() == Channel::X && e.is_high_cardinality()),
    ));
    f.push(def(
        "vertical_scrolling_y",
        18,
        "high-cardinality nominal field on y",
        |v| count_encodings(v, |e| e.channel() == Channel::Y && e.is_high_cardinality()),
    ));
    f.push(def(
        "high_cardinality_shape",
        50,
        "high-cardinality nominal field on shape",
        |v| count_encodings(v, |e| e.channel() == Channel::Shape && e.is_high_cardinality()),
    ));
    f.push(def(
        "high_cardinality_color",
        25,
        "high-cardinality nominal field on color",
        |v| count_encodings(v, |e| e.channel() == Channel::Color && e.is_high_cardinality()),
    ));

    f.push(def("polar", 20, "polar coordinates", |v| {
        flag(v.spec.coordinates == Coordinates::Polar)
    }));
    f.push(def("multi_layer", 15, "each layer beyond the first", |v| {
        v.layers.len().saturating_sub(1) as u32
    }));
    f.push(def("stack_zero", 4, "zero-based stacking", |v| {
        count_encodings(v, |e| e.enc.stack == Stack::Zero)
    }));
    f.push(def("stack_normalize", 8, "normalized stacking", |v| {
        count_encodings(v, |e| e.enc.stack == Stack::Normalize)
    }));

    f
}
