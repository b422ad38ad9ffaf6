use serde::{Deserialize, Serialize};

use crate::error::SpecError;
use crate::kb::{ChartSpec, ChartView, MarkType};

/// Estimated mark instances above which a chart is flagged.
pub const DEFAULT_DENSITY_CAP: u64 = 300;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Illegibility {
    pub illegible: bool,
    pub reason: Option<String>,
}

impl Illegibility {
    fn flag(reason: &str) -> Self {
        Self {
            illegible: true,
            reason: Some(reason.to_string()),
        }
    }
}

/// Density heuristic. Advisory: a human makes the final call.
pub fn flag_illegible(spec: &ChartSpec, cap: u64) -> Result<Illegibility, SpecError> {
    let view = ChartView::new(spec)?;
    for layer in &view.layers {
        let raw = !layer.is_aggregated();
        let barlike = matches!(layer.mark, MarkType::Bar | MarkType::Area);
        if raw && barlike && layer.encodings.iter().any(|e| e.is_high_cardinality() && e.channel().is_positional()) {
            return Ok(Illegibility::flag("overlapping bars without aggregation"));
        }
        let continuous = layer.encodings.iter().any(|e| e.is_continuous());
        if raw && continuous && view.rows > cap {
            match layer.mark {
                MarkType::Line => return Ok(Illegibility::flag("overplotted lines")),
                MarkType::Bar | MarkType::Area => {
                    return Ok(Illegibility::flag("overlapping bars without aggregation"))
                }
                _ => {}
            }
        }
        if !raw {
            // one mark per group: product of the discrete group-by cardinalities
            let instances = layer
                .encodings
                .iter()
                .filter_map(|e| e.discrete_cardinality())
                .fold(1u64, |acc, c| acc.saturating_mul(u64::from(c)));
            if instances > cap {
                return Ok(Illegibility::flag("too many marks after aggregation"));
            }
        }
    }
    Ok(Illegibility {
        illegible: false,
        reason: None,
    })
}
