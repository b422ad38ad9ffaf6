use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AugmentError, DesignPair};
use crate::kb::{extract_features, FeatureCatalog};

pub const DEFAULT_COVERAGE_THRESHOLD: u64 = 7;
/// Features present in more than this share of charts are not ablated.
pub const DOMINANT_SHARE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub threshold: u64,
    /// Occurrences summed over every chart on both sides of every pair.
    pub frequencies: BTreeMap<String, u64>,
    /// Number of charts in which the feature occurs at least once.
    pub chart_presence: BTreeMap<String, u64>,
    pub total_charts: u64,
    pub under_covered: BTreeSet<String>,
}

impl CoverageReport {
    /// Occurrences per chart, used to weight shift reports.
    pub fn relative_frequency(&self) -> BTreeMap<String, f64> {
        self.frequencies
            .iter()
            .map(|(k, &v)| {
                let f = if self.total_charts == 0 {
                    0.0
                } else {
                    v as f64 / self.total_charts as f64
                };
                (k.clone(), f)
            })
            .collect()
    }

    pub fn presence_share(&self, feature: &str) -> f64 {
        if self.total_charts == 0 {
            return 0.0;
        }
        self.chart_presence.get(feature).copied().unwrap_or(0) as f64 / self.total_charts as f64
    }

    pub fn is_dominant(&self, feature: &str) -> bool {
        self.presence_share(feature) > DOMINANT_SHARE
    }
}

pub fn coverage_report(
    corpus: &[DesignPair],
    catalog: &FeatureCatalog,
    threshold: u64,
) -> Result<CoverageReport, AugmentError> {
    let mut frequencies: BTreeMap<String, u64> =
        catalog.names().map(|n| (n.to_string(), 0)).collect();
    let mut chart_presence = frequencies.clone();
    let mut total_charts = 0;
    for pair in corpus {
        for spec in [&pair.left, &pair.right] {
            total_charts += 1;
            for (name, count) in extract_features(spec, catalog)?.iter() {
                *frequencies.entry(name.to_string()).or_default() += u64::from(count);
                *chart_presence.entry(name.to_string()).or_default() += 1;
            }
        }
    }
    let under_covered = frequencies
        .iter()
        .filter(|(_, &v)| v < threshold)
        .map(|(k, _)| k.clone())
        .collect();
    Ok(CoverageReport {
        threshold,
        frequencies,
        chart_presence,
        total_charts,
        under_covered,
    })
}
