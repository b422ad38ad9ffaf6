//! Request and response bodies of the HTTP service.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::augment::{
    AblationConfig, BinaryResult, DesignPair, Label, Lineage, PairSource, SeedDataSpec, UnaryResult,
};
use crate::enumerator::{EnumerationBounds, PartialSpec};
use crate::evaluate::{ComplianceResult, SliceAccuracy, SliceKey};
use crate::kb::{ChartSpec, FeatureVector, HardViolation, WeightTable};
use crate::labeling::{ClassifierConfig, LabelRecord, LlmConfig, LlmOutcome, SessionState, Strategy};
use crate::training::{CvReport, ModelCoefficients, ModelFamily, SplitPlan, TrainConfig};

/// Error body for every non-2xx answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub strategy: Strategy,
    pub state: SessionState,
    pub iteration: usize,
    pub max_iterations: usize,
    pub batch_size: usize,
    pub answered_in_batch: usize,
    pub answered_total: usize,
    pub queue_len: usize,
    pub retrain_count: usize,
    pub manual_labels: usize,
    pub total_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairView {
    pub pair_id: String,
    pub left: ChartSpec,
    pub right: ChartSpec,
    /// Vega-Lite documents for rendering.
    pub left_render: serde_json::Value,
    pub right_render: serde_json::Value,
    pub source: PairSource,
    pub lineage: Option<Lineage>,
    pub group: Option<String>,
    pub illegible: bool,
    pub illegible_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NextStatus {
    Ready,
    Retraining,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    pub status: NextStatus,
    pub pair: Option<PairView>,
    pub session: SessionView,
}

/// `-1`, `0`, `1` or `"illegible"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelChoice {
    Label(Label),
    Mark(IllegibleTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IllegibleTag {
    Illegible,
}

impl LabelChoice {
    pub const ILLEGIBLE: LabelChoice = LabelChoice::Mark(IllegibleTag::Illegible);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRequest {
    pub pair_id: String,
    pub label: LabelChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub pair_id: String,
    pub retrain_triggered: bool,
    pub session: SessionView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDetail {
    pub pair: PairView,
    pub labels: Vec<LabelRecord>,
    pub effective: Option<LabelRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub weights_version: u32,
    pub pairs: usize,
    pub slices: Vec<SliceAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRequest {
    pub spec: ChartSpec,
    #[serde(default)]
    pub weights: Option<WeightTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub valid: bool,
    pub violations: Vec<HardViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesResponse {
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostResponse {
    pub cost: i64,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerateRequest {
    pub partial: PartialSpec,
    #[serde(default)]
    pub force: BTreeSet<String>,
    #[serde(default)]
    pub forbid: BTreeSet<String>,
    #[serde(default)]
    pub bounds: EnumerationBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignsResponse {
    pub designs: Vec<ChartSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveAugmentRequest {
    pub pairs: Vec<DesignPair>,
    pub max_new: usize,
    #[serde(default)]
    pub bounds: EnumerationBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsResponse {
    pub pairs: Vec<DesignPair>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAugmentRequest {
    /// Data/shape contexts whose completions supply the designs.
    pub partials: Vec<PartialSpec>,
    /// Corpus for coverage and dominance checks.
    #[serde(default)]
    pub corpus: Vec<DesignPair>,
    /// Features to ablate; defaults to the corpus's under-covered ones.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Also ablate admissible pairs of the chosen features.
    #[serde(default)]
    pub binary: bool,
    pub threshold: u64,
    #[serde(default)]
    pub config: AblationConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureAugmentResponse {
    pub unary: Vec<UnaryResult>,
    pub binary: Vec<BinaryResult>,
    pub pairs: Vec<DesignPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAugmentRequest {
    /// Defaults to the built-in seeds.
    #[serde(default)]
    pub seeds: Option<Vec<SeedDataSpec>>,
    #[serde(default)]
    pub weights: Option<WeightTable>,
    pub n_top: usize,
    pub seed: u64,
    #[serde(default)]
    pub bounds: EnumerationBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRequest {
    pub corpus: Vec<DesignPair>,
    pub threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepsRequest {
    pub partials: Vec<PartialSpec>,
    #[serde(default)]
    pub corpus: Vec<DesignPair>,
    #[serde(default)]
    pub bounds: EnumerationBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub labeled: Vec<DesignPair>,
    pub unlabeled: Vec<DesignPair>,
    #[serde(default)]
    pub config: ClassifierConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub records: Vec<LabelRecord>,
    pub train_accuracy: f64,
    pub cv_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub pairs: Vec<DesignPair>,
    #[serde(default)]
    pub config: LlmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub outcomes: Vec<LlmOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportRequest {
    pub jsonl: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub imported: usize,
    pub manual_labels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportResponse {
    pub jsonl: String,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub pairs: Vec<DesignPair>,
    #[serde(default)]
    pub family: ModelFamily,
    #[serde(default)]
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    pub coefficients: ModelCoefficients,
    pub weights: WeightTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRequest {
    pub pairs: Vec<DesignPair>,
    #[serde(default)]
    pub family: ModelFamily,
    #[serde(default)]
    pub config: TrainConfig,
    pub holdout: f64,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResponse {
    pub plan: SplitPlan,
    pub report: CvReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub pairs: Vec<DesignPair>,
    #[serde(default)]
    pub weights: Option<WeightTable>,
    #[serde(default)]
    pub slices: Vec<SliceKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResponse {
    pub slices: Vec<SliceAccuracy>,
    pub results: Vec<(String, ComplianceResult)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRequest {
    pub before: WeightTable,
    pub after: WeightTable,
    /// Charts of these pairs give each feature's relative frequency.
    #[serde(default)]
    pub corpus: Vec<DesignPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineRequest {
    pub groups: BTreeMap<String, Vec<DesignPair>>,
}

