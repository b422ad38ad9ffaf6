use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AugmentError, DesignPair, Label, LabelProvenance, Lineage, PairSource};
use crate::enumerator::{top_k_distinct_cost, EncodingCount, EnumerationBounds, Enumerator, Fragment, PartialSpec};
use crate::kb::{Coordinates, Dataset, FeatureCatalog, FieldDef, KnowledgeBase, WeightTable};

pub const DEFAULT_N_TOP: usize = 8;

/// Data variables to encode plus the chart shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDataSpec {
    pub name: String,
    pub fields: Vec<FieldDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<u64>,
    pub layer_count: usize,
    pub encoding_count: EncodingCount,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Coordinates>,
}

impl SeedDataSpec {
    /// Every seed field must be used somewhere in the design.
    pub fn partial(&self) -> PartialSpec {
        let mut ds = Dataset::new(self.fields.clone()).named(self.name.clone());
        ds.rows = self.rows;
        PartialSpec {
            dataset: Arc::new(ds),
            fixed: self.fields.iter().map(|f| Fragment::field(&f.name)).collect(),
            coordinates: self.coordinates,
            layer_count: self.layer_count,
            encoding_count: self.encoding_count.clone(),
        }
    }
}

const BUILTIN_SEEDS: &str = include_str!("../../data/seeds.json");

/// The ten curated data specifications shipped with the crate.
pub fn builtin_seeds() -> Vec<SeedDataSpec> {
    serde_json::from_str(BUILTIN_SEEDS).expect("bundled seeds parse")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub pairs: Vec<DesignPair>,
    pub warnings: Vec<String>,
}

/// Top `n_top` distinct-cost designs per seed, paired all-against-all and
/// labeled by `w` (lower cost preferred). Orientation is randomized.
pub fn seed_augment(
    seeds: &[SeedDataSpec],
    catalog: &FeatureCatalog,
    w: &WeightTable,
    n_top: usize,
    bounds: &EnumerationBounds,
    rng_seed: u64,
) -> Result<SeedResult, AugmentError> {
    if n_top < 2 {
        return Err(AugmentError::Invalid("n_top must be at least 2".into()));
    }
    let kb = KnowledgeBase::new(catalog.clone(), w.clone())?;
    let en = Enumerator::new(&kb);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for seed in seeds {
        let specs = en.complete(&seed.partial(), bounds)?;
        let top = if specs.is_empty() {
            vec![]
        } else {
            top_k_distinct_cost(&specs, w, catalog, n_top)?
        };
        if top.len() < 2 {
            warnings.push(format!("seed `{}` has fewer than 2 distinct costs", seed.name));
            continue;
        }
        if top.len() < n_top {
            warnings.push(format!("seed `{}`: only {} distinct costs", seed.name, top.len()));
        }
        // ascending cost, so i < j means top[i] is preferred
        for i in 0..top.len() {
            for j in i + 1..top.len() {
                let id = format!("seed:{}:{i}-{j}", seed.name);
                let (left, right, label) = if rng.random_bool(0.5) {
                    (&top[j], &top[i], Label::Right)
                } else {
                    (&top[i], &top[j], Label::Left)
                };
                let pair = DesignPair::new(id, left.clone(), right.clone(), PairSource::SeedAug)?
                    .labeled(label, LabelProvenance::SeedWeights)
                    .with_lineage(Lineage {
                        origin: Some(seed.name.clone()),
                        ..Default::default()
                    })
                    .in_group(seed.name.clone());
                pairs.push(pair);
            }
        }
    }
    Ok(SeedResult { pairs, warnings })
}
