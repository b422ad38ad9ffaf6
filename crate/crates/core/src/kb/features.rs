use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::catalog::FeatureCatalog;
use super::spec::ChartSpec;
use super::validate::violations;
use super::view::ChartView;
use crate::error::KbError;

/// Sparse per-feature violation counts. Absent keys count as zero; zero
/// counts are never stored, so equal vectors compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    counts: BTreeMap<String, u32>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_dense(catalog: &FeatureCatalog, dense: &[u32]) -> Self {
        let counts = catalog
            .names()
            .zip(dense)
            .filter(|(_, &c)| c > 0)
            .map(|(n, &c)| (n.to_string(), c))
            .collect();
        Self { counts }
    }

    pub fn get(&self, name: &str) -> u32 {
        self.counts.get(name).copied().unwrap_or(0)
    }

    pub fn set(&mut self, name: impl Into<String>, count: u32) {
        let name = name.into();
        if count == 0 {
            self.counts.remove(&name);
        } else {
            self.counts.insert(name, count);
        }
    }

    pub fn has(&self, name: &str) -> bool {
        self.get(name) > 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn is_zero(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn dense(&self, catalog: &FeatureCatalog) -> Vec<f64> {
        catalog.names().map(|n| f64::from(self.get(n))).collect()
    }

    /// Signed difference `self - other` over the union of keys.
    pub fn diff(&self, other: &FeatureVector) -> BTreeMap<String, i64> {
        let mut out: BTreeMap<String, i64> = BTreeMap::new();
        for (k, v) in self.iter() {
            *out.entry(k.to_string()).or_default() += i64::from(v);
        }
        for (k, v) in other.iter() {
            *out.entry(k.to_string()).or_default() -= i64::from(v);
        }
        out.retain(|_, v| *v != 0);
        out
    }
}

impl Add for &FeatureVector {
    type Output = FeatureVector;

    fn add(self, rhs: &FeatureVector) -> FeatureVector {
        let mut out = self.clone();
        for (k, v) in rhs.iter() {
            let sum = out.get(k) + v;
            out.set(k, sum);
        }
        out
    }
}

impl Sub for &FeatureVector {
    type Output = BTreeMap<String, i64>;

    fn sub(self, rhs: &FeatureVector) -> Self::Output {
        self.diff(rhs)
    }
}

impl<S: Into<String>> FromIterator<(S, u32)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (S, u32)>>(iter: I) -> Self {
        let mut fv = FeatureVector::new();
        for (k, v) in iter {
            fv.set(k, v);
        }
        fv
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightProvenance {
    #[default]
    Builtin,
    Learned,
    Manual,
}

/// Integer weight per feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightTable {
    pub weights: BTreeMap<String, i64>,
    #[serde(default)]
    pub version: u32,
    #[serde(default)]
    pub provenance: WeightProvenance,
}

impl WeightTable {
    pub fn new(weights: BTreeMap<String, i64>, provenance: WeightProvenance) -> Self {
        Self {
            weights,
            version: 1,
            provenance,
        }
    }

    pub fn builtin(catalog: &FeatureCatalog) -> Self {
        Self::new(catalog.default_weights(), WeightProvenance::Builtin)
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.weights.get(name).copied()
    }

    /// Weighted sum of counts; every counted feature must carry a weight.
    pub fn cost(&self, fv: &FeatureVector) -> Result<i64, KbError> {
        fv.iter().try_fold(0i64, |acc, (name, count)| {
            let w = self
                .get(name)
                .ok_or_else(|| KbError::MissingWeight(name.to_string()))?;
            Ok(acc + w * i64::from(count))
        })
    }

    /// Every weight multiplied by `k`.
    pub fn scaled(&self, k: i64) -> Self {
        let mut out = self.clone();
        for w in out.weights.values_mut() {
            *w *= k;
        }
        out.version += 1;
        out
    }

    /// Successor table with the given weights, version bumped.
    pub fn successor(&self, weights: BTreeMap<String, i64>, provenance: WeightProvenance) -> Self {
        Self {
            weights,
            version: self.version + 1,
            provenance,
        }
    }

    /// Checks the domain is a subset of the catalog.
    pub fn check_domain(&self, catalog: &FeatureCatalog) -> Result<(), KbError> {
        match self.weights.keys().find(|k| !catalog.contains(k)) {
            Some(k) => Err(KbError::UnknownFeature(k.clone())),
            None => Ok(()),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "weight"]).expect("in-memory write");
        for (k, v) in &self.weights {
            w.write_record([k.as_str(), &v.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }

    pub fn from_csv(text: &str, provenance: WeightProvenance) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut weights = BTreeMap::new();
        for rec in r.deserialize::<(String, i64)>() {
            let (k, v) = rec?;
            weights.insert(k, v);
        }
        Ok(Self::new(weights, provenance))
    }
}

/// Catalog plus the current weights: the knowledge base proper.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub catalog: FeatureCatalog,
    pub weights: WeightTable,
}

impl KnowledgeBase {
    pub fn new(catalog: FeatureCatalog, weights: WeightTable) -> Result<Self, KbError> {
        weights.check_domain(&catalog)?;
        Ok(Self { catalog, weights })
    }

    pub fn builtin() -> Self {
        let catalog = FeatureCatalog::builtin();
        let weights = WeightTable::builtin(&catalog);
        Self { catalog, weights }
    }

    pub fn features(&self, spec: &ChartSpec) -> Result<FeatureVector, KbError> {
        extract_features(spec, &self.catalog)
    }

    pub fn cost(&self, spec: &ChartSpec) -> Result<i64, KbError> {
        self.weights.cost(&self.features(spec)?)
    }
}

/// Feature counts for a valid spec.
pub fn extract_features(spec: &ChartSpec, catalog: &FeatureCatalog) -> Result<FeatureVector, KbError> {
    spec.dataset.check()?;
    let view = ChartView::new(spec)?;
    let bad = violations(&view);
    if !bad.is_empty() {
        return Err(KbError::Invalid(bad));
    }
    Ok(FeatureVector::from_dense(catalog, &catalog.dense_counts(&view)))
}

pub fn cost(fv: &FeatureVector, weights: &WeightTable) -> Result<i64, KbError> {
    weights.cost(fv)
}
