use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::augment::DesignPair;
use crate::error::SpecError;
use crate::kb::abstract_primitives;

/// Ordered primitive-token vocabulary built from the pairs in scope.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Self::new(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn new(mut tokens: Vec<String>) -> Self {
        tokens.sort();
        tokens.dedup();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a DesignPair>) -> Result<Self, SpecError> {
        let mut tokens = Vec::new();
        for p in pairs {
            for spec in [&p.left, &p.right] {
                tokens.extend(abstract_primitives(spec)?.distinct().map(|t| t.as_str().to_string()));
            }
        }
        Ok(Self::new(tokens))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }
}

/// `v[t] = count_left(t) - count_right(t)`. Tokens outside the vocabulary
/// are dropped.
pub fn primitive_diff_vector(pair: &DesignPair, vocab: &Vocabulary) -> Result<Vec<f64>, SpecError> {
    let mut v = vec![0.0; vocab.len()];
    for (spec, sign) in [(&pair.left, 1.0), (&pair.right, -1.0)] {
        for (tok, n) in abstract_primitives(spec)?.iter() {
            if let Some(i) = vocab.position(tok.as_str()) {
                v[i] += sign * f64::from(n);
            }
        }
    }
    Ok(v)
}
