use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::augment::{DesignPair, Label};
use crate::kb::{extract_features, FeatureCatalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Original,
    Rotated,
}

/// `x = features(first) - features(second)` in catalog order; `y = +1`
/// means the second design is preferred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub x: Vec<f64>,
    pub y: i8,
    pub pair_id: String,
    pub orientation: Orientation,
}

/// Both orientations of a labeled pair. Ties become both labels in both
/// orientations.
pub fn pair_to_examples(pair: &DesignPair, catalog: &FeatureCatalog) -> Result<Vec<TrainExample>, TrainError> {
    let label = pair.label.ok_or_else(|| TrainError::Unlabeled(pair.id.clone()))?;
    let l = extract_features(&pair.left, catalog)?.dense(catalog);
    let r = extract_features(&pair.right, catalog)?.dense(catalog);
    let x: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a - b).collect();
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let ex = |x: &Vec<f64>, y: i8, orientation| TrainExample {
        x: x.clone(),
        y,
        pair_id: pair.id.clone(),
        orientation,
    };
    Ok(match label {
        Label::Left | Label::Right => {
            let y = label.value();
            vec![
                ex(&x, y, Orientation::Original),
                ex(&neg, -y, Orientation::Rotated),
            ]
        }
        Label::Equal => vec![
            ex(&x, -1, Orientation::Original),
            ex(&x, 1, Orientation::Original),
            ex(&neg, -1, Orientation::Rotated),
            ex(&neg, 1, Orientation::Rotated),
        ],
    })
}

pub fn pairs_to_examples<'a>(
    pairs: impl IntoIterator<Item = &'a DesignPair>,
    catalog: &FeatureCatalog,
) -> Result<Vec<TrainExample>, TrainError> {
    let mut out = Vec::new();
    for p in pairs {
        out.extend(pair_to_examples(p, catalog)?);
    }
    Ok(out)
}
