use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::augment::{DesignPair, Label};
use crate::kb::{extract_features, ChartSpec, FeatureCatalog, WeightTable};

/// Largest absolute cost gap still counted as a tie.
pub const NEAR_TIE: i64 = 2;

/// Costs of two designs shown in a given order. Orientation is an input so
/// that scorers which are not symmetric can be caught out.
pub trait Scorer {
    fn pair_costs(&self, first: &ChartSpec, second: &ChartSpec) -> Result<(i64, i64), EvalError>;
}

pub struct WeightScorer<'a> {
    pub catalog: &'a FeatureCatalog,
    pub weights: &'a WeightTable,
}

impl<'a> WeightScorer<'a> {
    pub fn new(catalog: &'a FeatureCatalog, weights: &'a WeightTable) -> Self {
        Self { catalog, weights }
    }

    pub fn cost(&self, spec: &ChartSpec) -> Result<i64, EvalError> {
        Ok(self.weights.cost(&extract_features(spec, self.catalog)?)?)
    }
}

impl Scorer for WeightScorer<'_> {
    fn pair_costs(&self, first: &ChartSpec, second: &ChartSpec) -> Result<(i64, i64), EvalError> {
        Ok((self.cost(first)?, self.cost(second)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    StrictOrder,
    NearTie,
    DuplicateInconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceResult {
    pub pair_id: String,
    pub compliant: bool,
    pub cost_left: i64,
    pub cost_right: i64,
    pub rule_applied: Rule,
}

fn verdict(label: Label, first: i64, second: i64) -> (bool, Rule) {
    match label {
        Label::Left => (first < second, Rule::StrictOrder),
        Label::Right => (second < first, Rule::StrictOrder),
        Label::Equal => ((first - second).abs() <= NEAR_TIE, Rule::NearTie),
    }
}

/// Scores the pair as given and swapped; disagreeing verdicts are
/// non-compliant.
pub fn compliance(pair: &DesignPair, scorer: &dyn Scorer) -> Result<ComplianceResult, EvalError> {
    let label = pair.label.ok_or_else(|| EvalError::Unlabeled(pair.id.clone()))?;
    let (cl, cr) = scorer.pair_costs(&pair.left, &pair.right)?;
    let (sr, sl) = scorer.pair_costs(&pair.right, &pair.left)?;
    let (ok, rule) = verdict(label, cl, cr);
    let (ok_swapped, _) = verdict(label.negate(), sr, sl);
    let (compliant, rule_applied) = if ok == ok_swapped {
        (ok, rule)
    } else {
        (false, Rule::DuplicateInconsistent)
    };
    Ok(ComplianceResult {
        pair_id: pair.id.clone(),
        compliant,
        cost_left: cl,
        cost_right: cr,
        rule_applied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceKey {
    All,
    Source,
    LabelProvenance,
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAccuracy {
    pub slice: String,
    pub n: usize,
    /// `None` for an empty slice.
    pub accuracy: Option<f64>,
}

/// Compliant share per slice. Slices are "all", then per source, label
/// provenance and group as requested.
pub fn accuracy(
    pairs: &[DesignPair],
    scorer: &dyn Scorer,
    slices: &[SliceKey],
) -> Result<Vec<SliceAccuracy>, EvalError> {
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    tally.insert("all".into(), (0, 0));
    for pair in pairs {
        let ok = compliance(pair, scorer)?.compliant as usize;
        let mut keys = vec!["all".to_string()];
        for s in slices {
            match s {
                SliceKey::All => {}
                SliceKey::Source => keys.push(format!("source={}", pair.source.as_str())),
                SliceKey::LabelProvenance => {
                    keys.push(format!("label_provenance={}", pair.label_provenance.as_str()))
                }
                SliceKey::Group => keys.push(format!(
                    "group={}",
                    pair.group.as_deref().unwrap_or("-")
                )),
            }
        }
        for k in keys {
            let e = tally.entry(k).or_default();
            e.0 += 1;
            e.1 += ok;
        }
    }
    Ok(tally
        .into_iter()
        .map(|(slice, (n, ok))| SliceAccuracy {
            slice,
            n,
            accuracy: (n > 0).then(|| ok as f64 / n as f64),
        })
        .collect())
}
