//! Chart specifications, hard constraints, soft-constraint features, costs
//! and primitive abstraction.

pub mod catalog;
pub mod features;
pub mod primitives;
pub mod render;
pub mod shorthand;
pub mod spec;
pub mod validate;
pub mod view;

pub use catalog::{CatalogEntry, FeatureCatalog, FeatureDef, BIN_HIGH_THRESHOLD};
pub use features::{cost, extract_features, FeatureVector, KnowledgeBase, WeightProvenance, WeightTable};
pub use primitives::{abstract_primitives, PrimitiveToken, TokenBag};
pub use render::to_vega_lite;
pub use spec::*;
pub use validate::{validate, HardRule, HardViolation};
pub use view::{ChartView, HIGH_CARDINALITY};
