use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AugmentError, DesignPair};
use crate::kb::{abstract_primitives, ChartSpec, TokenBag};

/// Tokens one role (channel, `mark`, `facet`, `coordinates`) has only on the
/// left and only on the right.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiffEntry {
    pub role: String,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignDifference {
    pub diffs: Vec<DiffEntry>,
}

impl DesignDifference {
    /// Difference between two token multisets, grouped by role.
    pub fn between(left: &TokenBag, right: &TokenBag) -> Self {
        let mut groups: BTreeMap<String, (Vec<String>, Vec<String>)> = BTreeMap::new();
        for t in left.minus(right).to_vec() {
            groups.entry(t.role().to_string()).or_default().0.push(t.0);
        }
        for t in right.minus(left).to_vec() {
            groups.entry(t.role().to_string()).or_default().1.push(t.0);
        }
        let diffs = groups
            .into_iter()
            .map(|(role, (left, right))| DiffEntry { role, left, right })
            .collect();
        Self { diffs }
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn left_tokens(&self) -> TokenBag {
        self.diffs
            .iter()
            .flat_map(|d| d.left.iter().map(String::as_str))
            .collect()
    }

    pub fn right_tokens(&self) -> TokenBag {
        self.diffs
            .iter()
            .flat_map(|d| d.right.iter().map(String::as_str))
            .collect()
    }

    /// Rewrites a left-side token multiset into the matching right side.
    pub fn apply(&self, left: &TokenBag) -> TokenBag {
        left.minus(&self.left_tokens()).plus(&self.right_tokens())
    }
}

pub(crate) fn spec_difference(left: &ChartSpec, right: &ChartSpec) -> Result<DesignDifference, AugmentError> {
    Ok(DesignDifference::between(
        &abstract_primitives(left)?,
        &abstract_primitives(right)?,
    ))
}

/// Primitive-level differences of a pair. Identical designs are an error.
pub fn extract_design_differences(pair: &DesignPair) -> Result<DesignDifference, AugmentError> {
    let d = spec_difference(&pair.left, &pair.right)?;
    if d.is_empty() {
        return Err(AugmentError::Invalid(format!(
            "pair `{}` has no primitive differences",
            pair.id
        )));
    }
    Ok(d)
}
