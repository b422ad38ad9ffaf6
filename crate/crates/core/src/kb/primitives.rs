//! Identifier-free design primitives.
//!
//! A chart's entities (marks, encodings, scales, facet) are flattened into
//! dot-path tokens that name the visual element rather than an entity id:
//! a log-scaled quantitative color encoding becomes `color`,
//! `color.quantitative`, `color.log`. Tokens of one encoding form a set; the
//! chart is the multiset union over encodings and layers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::spec::*;
use super::view::ChartView;
use crate::error::SpecError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrimitiveToken(pub String);

impl PrimitiveToken {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Leading path segment: the channel, `mark`, `facet` or `coordinates`.
    pub fn role(&self) -> &str {
        self.0.split('.').next().unwrap_or(&self.0)
    }
}

impl fmt::Display for PrimitiveToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PrimitiveToken {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Multiset of tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenBag(BTreeMap<PrimitiveToken, u32>);

impl TokenBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: PrimitiveToken) {
        *self.0.entry(token).or_default() += 1;
    }

    pub fn insert_n(&mut self, token: PrimitiveToken, n: u32) {
        if n > 0 {
            *self.0.entry(token).or_default() += n;
        }
    }

    pub fn count(&self, token: &str) -> u32 {
        self.0
            .get(&PrimitiveToken::new(token))
            .copied()
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PrimitiveToken, u32)> {
        self.0.iter().map(|(t, &n)| (t, n))
    }

    pub fn len(&self) -> usize {
        self.0.values().map(|&n| n as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Tokens in `self` not matched in `other`, with multiplicity.
    pub fn minus(&self, other: &TokenBag) -> TokenBag {
        let mut out = TokenBag::new();
        for (t, n) in self.iter() {
            let m = other.0.get(t).copied().unwrap_or(0);
            if n > m {
                out.insert_n(t.clone(), n - m);
            }
        }
        out
    }

    pub fn plus(&self, other: &TokenBag) -> TokenBag {
        let mut out = self.clone();
        for (t, n) in other.iter() {
            out.insert_n(t.clone(), n);
        }
        out
    }

    /// Multiset inclusion.
    pub fn contains_all(&self, other: &TokenBag) -> bool {
        other
            .iter()
            .all(|(t, n)| self.0.get(t).copied().unwrap_or(0) >= n)
    }

    /// Expanded sorted token list.
    pub fn to_vec(&self) -> Vec<PrimitiveToken> {
        self.iter()
            .flat_map(|(t, n)| std::iter::repeat_n(t.clone(), n as usize))
            .collect()
    }

    pub fn distinct(&self) -> impl Iterator<Item = &PrimitiveToken> {
        self.0.keys()
    }
}

impl FromIterator<PrimitiveToken> for TokenBag {
    fn from_iter<I: IntoIterator<Item = PrimitiveToken>>(iter: I) -> Self {
        let mut bag = TokenBag::new();
        for t in iter {
            bag.insert(t);
        }
        bag
    }
}

impl<'a> FromIterator<&'a str> for TokenBag {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        iter.into_iter().map(PrimitiveToken::from).collect()
    }
}

/// Token multiset of a structurally well-formed spec.
pub fn abstract_primitives(spec: &ChartSpec) -> Result<TokenBag, SpecError> {
    let view = ChartView::new(spec)?;
    Ok(tokens_of(&view))
}

pub(crate) fn tokens_of(view: &ChartView<'_>) -> TokenBag {
    let spec = view.spec;
    let mut bag = TokenBag::new();
    bag.insert(PrimitiveToken(format!(
        "coordinates.{}",
        spec.coordinates.as_str()
    )));
    for layer in &view.layers {
        bag.insert(PrimitiveToken(format!("mark.{}", layer.mark.as_str())));
        for enc in &layer.encodings {
            let ch = enc.channel().as_str();
            let mut set = BTreeSet::new();
            set.insert(ch.to_string());
            set.insert(format!("{ch}.{}", enc.type_token()));
            for s in spec.scale_types(enc.channel()) {
                set.insert(format!("{ch}.{}", s.as_str()));
            }
            if enc.enc.aggregate != Aggregate::None {
                set.insert(format!("{ch}.{}", enc.enc.aggregate.as_str()));
            }
            if let Some(b) = enc.enc.bin {
                set.insert(format!("{ch}.bin"));
                set.insert(format!("{ch}.bin.{b}"));
            }
            if enc.enc.stack != Stack::None {
                set.insert(format!("{ch}.stack.{}", enc.enc.stack.as_str()));
            }
            for t in set {
                bag.insert(PrimitiveToken(t));
            }
        }
    }
    if let Some((facet, _)) = view.facet {
        let dir = facet.direction.as_str();
        bag.insert(PrimitiveToken(format!("facet.{dir}")));
        if facet.bin.is_some() {
            bag.insert(PrimitiveToken(format!("facet.{dir}.bin")));
        }
    }
    bag
}
