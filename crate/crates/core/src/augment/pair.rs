use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::kb::ChartSpec;

/// Preference label: `-1` prefers the left design, `+1` the right one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Left,
    Equal,
    Right,
}

impl Label {
    pub fn value(self) -> i8 {
        match self {
            Label::Left => -1,
            Label::Equal => 0,
            Label::Right => 1,
        }
    }

    pub fn negate(self) -> Self {
        match self {
            Label::Left => Label::Right,
            Label::Equal => Label::Equal,
            Label::Right => Label::Left,
        }
    }

    pub fn from_value(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Label::Left),
            0 => Some(Label::Equal),
            1 => Some(Label::Right),
            _ => None,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.value()
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, String> {
        Label::from_value(v).ok_or_else(|| format!("label must be -1, 0 or 1, got {v}"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    #[default]
    Corpus,
    PrimitiveAug,
    FeatureAugUnary,
    FeatureAugBinary,
    SeedAug,
}

impl PairSource {
    pub fn as_str(self) -> &'static str {
        match self {
            PairSource::Corpus => "corpus",
            PairSource::PrimitiveAug => "primitive_aug",
            PairSource::FeatureAugUnary => "feature_aug_unary",
            PairSource::FeatureAugBinary => "feature_aug_binary",
            PairSource::SeedAug => "seed_aug",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelProvenance {
    Manual,
    Ml,
    ActiveMl,
    Llm,
    SeedWeights,
    #[default]
    None,
}

impl LabelProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelProvenance::Manual => "manual",
            LabelProvenance::Ml => "ml",
            LabelProvenance::ActiveMl => "active_ml",
            LabelProvenance::Llm => "llm",
            LabelProvenance::SeedWeights => "seed_weights",
            LabelProvenance::None => "none",
        }
    }
}

/// Where an augmented pair came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    #[serde(default)]
    pub origin: Option<String>,
    #[serde(default)]
    pub ablated: Vec<String>,
    /// Presence state of context features (binary ablation) or of the
    /// ablated feature on the left side (unary ablation).
    #[serde(default)]
    pub context: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPair {
    pub id: String,
    pub left: ChartSpec,
    pub right: ChartSpec,
    pub label: Option<Label>,
    #[serde(default)]
    pub source: PairSource,
    #[serde(default)]
    pub label_provenance: LabelProvenance,
    pub lineage: Option<Lineage>,
    #[serde(default)]
    pub illegible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub illegible_reason: Option<String>,
    /// Data or study group for stratified splits and sliced reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl DesignPair {
    pub fn new(
        id: impl Into<String>,
        left: ChartSpec,
        right: ChartSpec,
        source: PairSource,
    ) -> Result<Self, AugmentError> {
        let pair = Self {
            id: id.into(),
            left,
            right,
            label: None,
            source,
            label_provenance: LabelProvenance::None,
            lineage: None,
            illegible: false,
            illegible_reason: None,
            group: None,
        };
        pair.check()?;
        Ok(pair)
    }

    pub fn labeled(mut self, label: Label, provenance: LabelProvenance) -> Self {
        self.label = Some(label);
        self.label_provenance = provenance;
        self
    }

    pub fn with_lineage(mut self, lineage: Lineage) -> Self {
        self.lineage = Some(lineage);
        self
    }

    pub fn in_group(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn check(&self) -> Result<(), AugmentError> {
        if self.left.canonical_hash() == self.right.canonical_hash() {
            return Err(AugmentError::IdenticalSides(self.id.clone()));
        }
        if self.label.is_some() && self.label_provenance == LabelProvenance::None {
            return Err(AugmentError::UnprovenancedLabel(self.id.clone()));
        }
        Ok(())
    }

    /// Sides exchanged and the label negated.
    pub fn swapped(&self) -> Self {
        let mut p = self.clone();
        std::mem::swap(&mut p.left, &mut p.right);
        p.label = p.label.map(Label::negate);
        p
    }
}
