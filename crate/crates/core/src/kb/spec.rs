//! Declarative chart specification model.
//!
//! A [`ChartSpec`] is a complete design over a dataset schema: one or two
//! mark layers, each with one to four encodings, a shared set of scales (one
//! per used channel), an optional facet, and a coordinate system. Field
//! references are by name and resolve against the embedded [`Dataset`].

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SpecError;

/// Sentinel used in JSON for the implicit record count.
pub const COUNT_FIELD: &str = "__count__";

/// Version of the chart-spec JSON layout documented in the README.
pub const SPEC_SCHEMA_VERSION: u32 = 1;

pub const MAX_LAYERS: usize = 2;
pub const MAX_ENCODINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    Number,
    String,
    Datetime,
    Boolean,
}

impl DataType {
    pub fn is_nominal(self) -> bool {
        matches!(self, DataType::String | DataType::Boolean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min: f64,
    pub max: f64,
}

/// Per-variable statistics of a dataset column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    #[serde(rename = "type")]
    pub dtype: DataType,
    pub cardinality: u32,
    #[serde(default)]
    pub entropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Extent>,
    /// Marks the field of interest referenced by the `interesting_*` features.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub interesting: bool,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, dtype: DataType, cardinality: u32) -> Self {
        Self {
            name: name.into(),
            dtype,
            cardinality,
            entropy: 0.0,
            extent: None,
            interesting: false,
        }
    }

    pub fn with_extent(mut self, min: f64, max: f64) -> Self {
        self.extent = Some(Extent { min, max });
        self
    }

    pub fn with_entropy(mut self, entropy: f64) -> Self {
        self.entropy = entropy;
        self
    }

    pub fn interesting(mut self) -> Self {
        self.interesting = true;
        self
    }

    pub fn check(&self) -> Result<(), SpecError> {
        let bad = |reason: &str| SpecError::InvalidField {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.is_empty() || self.name == COUNT_FIELD {
            return Err(bad("reserved or empty name"));
        }
        if self.cardinality < 1 {
            return Err(bad("cardinality must be at least 1"));
        }
        if !(self.entropy >= 0.0) {
            return Err(bad("entropy must be non-negative"));
        }
        if self.entropy > f64::from(self.cardinality).log2() + 1e-9 {
            return Err(bad("entropy exceeds log2(cardinality)"));
        }
        if let Some(ext) = self.extent {
            if !(ext.min <= ext.max) {
                return Err(bad("extent min exceeds max"));
            }
            if !matches!(self.dtype, DataType::Number | DataType::Datetime) {
                return Err(bad("extent only applies to number and datetime fields"));
            }
        }
        Ok(())
    }
}

/// Dataset schema shared by every chart drawn from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Number of records; defaults to the largest field cardinality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<u64>,
    pub fields: Vec<FieldDef>,
}

impl Dataset {
    pub fn new(fields: Vec<FieldDef>) -> Self {
        Self {
            name: None,
            rows: None,
            fields,
        }
    }

    pub fn with_rows(mut self, rows: u64) -> Self {
        self.rows = Some(rows);
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn row_count(&self) -> u64 {
        self.rows.unwrap_or_else(|| {
            self.fields
                .iter()
                .map(|f| u64::from(f.cardinality))
                .max()
                .unwrap_or(1)
        })
    }

    pub fn check(&self) -> Result<(), SpecError> {
        for (i, f) in self.fields.iter().enumerate() {
            f.check()?;
            if self.fields[..i].iter().any(|g| g.name == f.name) {
                return Err(SpecError::InvalidField {
                    name: f.name.clone(),
                    reason: "duplicate field name".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Color,
    Size,
    Shape,
    Text,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::X,
        Channel::Y,
        Channel::Color,
        Channel::Size,
        Channel::Shape,
        Channel::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
            Channel::Size => "size",
            Channel::Shape => "shape",
            Channel::Text => "text",
        }
    }

    pub fn is_positional(self) -> bool {
        matches!(self, Channel::X | Channel::Y)
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A field reference or the implicit record count.
///
/// Named fields order before the count sentinel so canonical enumeration
/// visits data-bearing designs first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum FieldRef {
    Field(String),
    Count,
}

impl FieldRef {
    pub fn field(name: impl Into<String>) -> Self {
        FieldRef::Field(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            FieldRef::Field(n) => n,
            FieldRef::Count => COUNT_FIELD,
        }
    }
}

impl From<String> for FieldRef {
    fn from(s: String) -> Self {
        if s == COUNT_FIELD {
            FieldRef::Count
        } else {
            FieldRef::Field(s)
        }
    }
}

impl From<FieldRef> for String {
    fn from(f: FieldRef) -> Self {
        match f {
            FieldRef::Field(n) => n,
            FieldRef::Count => COUNT_FIELD.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    None,
    Count,
    Mean,
    Sum,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::None => "none",
            Aggregate::Count => "count",
            Aggregate::Mean => "mean",
            Aggregate::Sum => "sum",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stack {
    #[default]
    None,
    Zero,
    Normalize,
}

impl Stack {
    pub fn as_str(self) -> &'static str {
        match self {
            Stack::None => "none",
            Stack::Zero => "zero",
            Stack::Normalize => "normalize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Encoding {
    pub channel: Channel,
    pub field: FieldRef,
    #[serde(default, skip_serializing_if = "is_default")]
    pub aggregate: Aggregate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<u32>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub stack: Stack,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl Encoding {
    pub fn new(channel: Channel, field: FieldRef) -> Self {
        let aggregate = if field == FieldRef::Count {
            Aggregate::Count
        } else {
            Aggregate::None
        };
        Self {
            channel,
            field,
            aggregate,
            bin: None,
            stack: Stack::None,
        }
    }

    pub fn field(channel: Channel, name: &str) -> Self {
        Self::new(channel, FieldRef::field(name))
    }

    pub fn count(channel: Channel) -> Self {
        Self::new(channel, FieldRef::Count)
    }

    pub fn aggregated(mut self, aggregate: Aggregate) -> Self {
        self.aggregate = aggregate;
        self
    }

    pub fn binned(mut self, bins: u32) -> Self {
        self.bin = Some(bins);
        self
    }

    pub fn stacked(mut self, stack: Stack) -> Self {
        self.stack = stack;
        self
    }

    fn sort_key(&self) -> (Channel, &FieldRef, Aggregate, Option<u32>, Stack) {
        (self.channel, &self.field, self.aggregate, self.bin, self.stack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkType {
    Point,
    Bar,
    Line,
    Area,
    Tick,
    Rect,
}

impl MarkType {
    pub const ALL: [MarkType; 6] = [
        MarkType::Point,
        MarkType::Bar,
        MarkType::Line,
        MarkType::Area,
        MarkType::Tick,
        MarkType::Rect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MarkType::Point => "point",
            MarkType::Bar => "bar",
            MarkType::Line => "line",
            MarkType::Area => "area",
            MarkType::Tick => "tick",
            MarkType::Rect => "rect",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Marks that are unreadable without a positional channel.
    pub fn needs_position(self) -> bool {
        matches!(self, MarkType::Bar | MarkType::Area | MarkType::Line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mark {
    #[serde(rename = "type")]
    pub mark: MarkType,
    pub encodings: Vec<Encoding>,
}

impl Mark {
    pub fn new(mark: MarkType, encodings: Vec<Encoding>) -> Self {
        Self { mark, encodings }
    }

    pub fn encoding(&self, channel: Channel) -> Option<&Encoding> {
        self.encodings.iter().find(|e| e.channel == channel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleType {
    Linear,
    Log,
    Ordinal,
    Categorical,
}

impl ScaleType {
    pub const ALL: [ScaleType; 4] = [
        ScaleType::Linear,
        ScaleType::Log,
        ScaleType::Ordinal,
        ScaleType::Categorical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScaleType::Linear => "linear",
            ScaleType::Log => "log",
            ScaleType::Ordinal => "ordinal",
            ScaleType::Categorical => "categorical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, ScaleType::Ordinal | ScaleType::Categorical)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Scale {
    pub channel: Channel,
    #[serde(rename = "type")]
    pub scale: ScaleType,
}

impl Scale {
    pub fn new(channel: Channel, scale: ScaleType) -> Self {
        Self { channel, scale }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetDirection {
    Row,
    Col,
}

impl FacetDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            FacetDirection::Row => "row",
            FacetDirection::Col => "col",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Facet {
    pub direction: FacetDirection,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinates {
    #[default]
    Cartesian,
    Polar,
}

impl Coordinates {
    pub fn as_str(self) -> &'static str {
        match self {
            Coordinates::Cartesian => "cartesian",
            Coordinates::Polar => "polar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub dataset: Arc<Dataset>,
    #[serde(default)]
    pub coordinates: Coordinates,
    pub marks: Vec<Mark>,
    pub scales: Vec<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet: Option<Facet>,
}

impl ChartSpec {
    pub fn new(dataset: Arc<Dataset>, marks: Vec<Mark>, scales: Vec<Scale>) -> Self {
        Self {
            dataset,
            coordinates: Coordinates::Cartesian,
            marks,
            scales,
            facet: None,
        }
    }

    pub fn with_facet(mut self, direction: FacetDirection, field: &str) -> Self {
        self.facet = Some(Facet {
            direction,
            field: field.to_string(),
            bin: None,
        });
        self
    }

    pub fn with_coordinates(mut self, coordinates: Coordinates) -> Self {
        self.coordinates = coordinates;
        self
    }

    pub fn encoding_count(&self) -> usize {
        self.marks.iter().map(|m| m.encodings.len()).sum()
    }

    /// Encoding counts per layer, in layer order.
    pub fn layer_shape(&self) -> Vec<usize> {
        self.marks.iter().map(|m| m.encodings.len()).collect()
    }

    pub fn scale_types(&self, channel: Channel) -> impl Iterator<Item = ScaleType> + '_ {
        self.scales
            .iter()
            .filter(move |s| s.channel == channel)
            .map(|s| s.scale)
    }

    /// Same design with encodings, layers and scales in canonical order.
    pub fn canonical(&self) -> ChartSpec {
        let mut spec = self.clone();
        for mark in &mut spec.marks {
            mark.encodings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        }
        spec.marks.sort_by(|a, b| layer_key(a).cmp(&layer_key(b)));
        spec.scales.sort();
        spec
    }

    pub fn canonical_key(&self) -> CanonicalKey {
        CanonicalKey::of(&self.canonical())
    }

    /// Stable content hash of the canonical form (16 hex chars).
    pub fn canonical_hash(&self) -> String {
        let canon = self.canonical();
        let json = serde_json::to_vec(&canon).expect("chart spec serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }
}

fn layer_key(m: &Mark) -> (MarkType, Vec<(Channel, &FieldRef, Aggregate, Option<u32>, Stack)>) {
    (m.mark, m.encodings.iter().map(|e| e.sort_key()).collect())
}

/// Total order over designs: mark types, then channels, then field names,
/// then scale types, then the remaining encoding details.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalKey {
    marks: Vec<MarkType>,
    channels: Vec<Vec<Channel>>,
    fields: Vec<Vec<FieldRef>>,
    scales: Vec<(Channel, ScaleType)>,
    details: Vec<Vec<(Aggregate, Option<u32>, Stack)>>,
    facet: Option<Facet>,
    coordinates: Coordinates,
    // tie-break for datasets that differ while everything else matches
    dataset: String,
}

impl CanonicalKey {
    fn of(canon: &ChartSpec) -> Self {
        Self {
            marks: canon.marks.iter().map(|m| m.mark).collect(),
            channels: canon
                .marks
                .iter()
                .map(|m| m.encodings.iter().map(|e| e.channel).collect())
                .collect(),
            fields: canon
                .marks
                .iter()
                .map(|m| m.encodings.iter().map(|e| e.field.clone()).collect())
                .collect(),
            scales: canon.scales.iter().map(|s| (s.channel, s.scale)).collect(),
            details: canon
                .marks
                .iter()
                .map(|m| {
                    m.encodings
                        .iter()
                        .map(|e| (e.aggregate, e.bin, e.stack))
                        .collect()
                })
                .collect(),
            facet: canon.facet.clone(),
            coordinates: canon.coordinates,
            dataset: canon.dataset.name.clone().unwrap_or_default(),
        }
    }
}

impl PartialOrd for CanonicalKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CanonicalKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.marks
            .cmp(&other.marks)
            .then_with(|| self.channels.cmp(&other.channels))
            .then_with(|| self.fields.cmp(&other.fields))
            .then_with(|| self.scales.cmp(&other.scales))
            .then_with(|| self.details.cmp(&other.details))
            .then_with(|| self.facet.cmp(&other.facet))
            .then_with(|| self.coordinates.cmp(&other.coordinates))
            .then_with(|| self.dataset.cmp(&other.dataset))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> Arc<Dataset> {
        Arc::new(Dataset::new(vec![
            FieldDef::new("a", DataType::Number, 100).with_extent(1.0, 9.0),
            FieldDef::new("b", DataType::String, 4),
        ]))
    }

    #[test]
    fn count_sentinel_round_trips() {
        let enc = Encoding::count(Channel::Y);
        let json = serde_json::to_string(&enc).unwrap();
        assert!(json.contains(COUNT_FIELD));
        let back: Encoding = serde_json::from_str(&json).unwrap();
        assert_eq!(back, enc);
        assert_eq!(back.aggregate, Aggregate::Count);
    }

    #[test]
    fn canonical_form_ignores_encoding_and_layer_order() {
        let ds = dataset();
        let a = ChartSpec::new(
            ds.clone(),
            vec![Mark::new(
                MarkType::Point,
                vec![Encoding::field(Channel::Y, "a"), Encoding::field(Channel::X, "b")],
            )],
            vec![
                Scale::new(Channel::Y, ScaleType::Linear),
                Scale::new(Channel::X, ScaleType::Categorical),
            ],
        );
        let mut b = a.clone();
        b.marks[0].encodings.reverse();
        b.scales.reverse();
        assert_eq!(a.canonical_hash(), b.canonical_hash());
        assert_eq!(a.canonical_key(), b.canonical_key());
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn field_invariants() {
        assert!(FieldDef::new("z", DataType::Number, 0).check().is_err());
        assert!(FieldDef::new("z", DataType::Number, 4)
            .with_entropy(3.0)
            .check()
            .is_err());
        assert!(FieldDef::new("z", DataType::Number, 8)
            .with_entropy(3.0)
            .check()
            .is_ok());
        assert!(FieldDef::new("z", DataType::Number, 8)
            .with_extent(2.0, 1.0)
            .check()
            .is_err());
        let dup = Dataset::new(vec![
            FieldDef::new("z", DataType::Number, 8),
            FieldDef::new("z", DataType::String, 8),
        ]);
        assert!(dup.check().is_err());
    }

    #[test]
    fn row_count_defaults_to_max_cardinality() {
        assert_eq!(dataset().row_count(), 100);
        assert_eq!(Dataset::new(vec![]).with_rows(7).row_count(), 7);
    }
}
