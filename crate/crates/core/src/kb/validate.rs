//! Built-in hard constraints.
//!
//! The rule set is fixed in code. H1-H7 reconstruct the constraints a
//! grammar-aware recommender treats as non-negotiable; H8 closes the gap
//! that would otherwise let a continuous scale run over nominal values.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::spec::*;
use super::view::{ChartView, EncView};
use crate::error::SpecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HardRule {
    /// At most one scale per channel.
    H1,
    /// Log scales need a strictly positive number field.
    H2,
    /// Ordinal/categorical scales need a nominal or binned field.
    H3,
    /// Binning only applies to number fields.
    H4,
    /// Bar, area and line marks need a positional channel.
    H5,
    /// Channels are unique within a mark.
    H6,
    /// Facets need a discrete field.
    H7,
    /// Linear scales cannot run over nominal fields.
    H8,
}

impl HardRule {
    pub fn code(self) -> &'static str {
        match self {
            HardRule::H1 => "H1",
            HardRule::H2 => "H2",
            HardRule::H3 => "H3",
            HardRule::H4 => "H4",
            HardRule::H5 => "H5",
            HardRule::H6 => "H6",
            HardRule::H7 => "H7",
            HardRule::H8 => "H8",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HardViolation {
    pub rule: HardRule,
    pub detail: String,
}

impl fmt::Display for HardViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule.code(), self.detail)
    }
}

/// All hard-constraint violations of `spec`, sorted by rule. An empty list
/// means the spec is valid.
pub fn validate(spec: &ChartSpec) -> Result<Vec<HardViolation>, SpecError> {
    spec.dataset.check()?;
    let view = ChartView::new(spec)?;
    Ok(violations(&view))
}

/// The rule a scale type breaks when applied to an encoding, if any.
pub(crate) fn scale_conflict(scale: ScaleType, enc: &EncView<'_>) -> Option<HardRule> {
    match scale {
        ScaleType::Log => {
            let ok = match enc.field {
                // empty cells count zero
                None => false,
                Some(f) => f.dtype == DataType::Number && f.extent.is_some_and(|e| e.min > 0.0),
            };
            (!ok).then_some(HardRule::H2)
        }
        ScaleType::Ordinal | ScaleType::Categorical => (!enc.is_discrete()).then_some(HardRule::H3),
        ScaleType::Linear => {
            (enc.enc.bin.is_none() && enc.dtype().is_some_and(DataType::is_nominal))
                .then_some(HardRule::H8)
        }
    }
}

pub(crate) fn violations(view: &ChartView<'_>) -> Vec<HardViolation> {
    let spec = view.spec;
    let mut out = Vec::new();
    let mut push = |rule, detail: String| out.push(HardViolation { rule, detail });

    let mut per_channel: BTreeMap<Channel, Vec<ScaleType>> = BTreeMap::new();
    for s in &spec.scales {
        per_channel.entry(s.channel).or_default().push(s.scale);
    }
    for (channel, types) in &per_channel {
        if types.len() > 1 {
            let names: Vec<_> = types.iter().map(|t| t.as_str()).collect();
            push(
                HardRule::H1,
                format!("channel {channel} has {} scales ({})", types.len(), names.join(", ")),
            );
        }
    }

    for enc in view.encodings() {
        let channel = enc.channel();
        for &scale in per_channel.get(&channel).into_iter().flatten() {
            if let Some(rule) = scale_conflict(scale, enc) {
                let detail = match rule {
                    HardRule::H2 => format!("log scale on {channel} over `{}`", enc.enc.field.name()),
                    HardRule::H3 => format!(
                        "{} scale on {channel} over continuous `{}`",
                        scale.as_str(),
                        enc.enc.field.name()
                    ),
                    _ => format!("linear scale on {channel} over nominal `{}`", enc.enc.field.name()),
                };
                push(rule, detail);
            }
        }
        if enc.enc.bin.is_some() && enc.dtype() != Some(DataType::Number) {
            push(
                HardRule::H4,
                format!("bin on {channel} over non-number `{}`", enc.enc.field.name()),
            );
        }
    }

    for (i, layer) in view.layers.iter().enumerate() {
        if layer.mark.needs_position()
            && !layer.encodings.iter().any(|e| e.channel().is_positional())
        {
            push(
                HardRule::H5,
                format!("layer {i}: {} mark without x or y", layer.mark.as_str()),
            );
        }
        for (j, e) in layer.encodings.iter().enumerate() {
            if layer.encodings[..j].iter().any(|o| o.channel() == e.channel()) {
                push(
                    HardRule::H6,
                    format!("layer {i}: channel {} used twice", e.channel()),
                );
            }
        }
    }

    if let Some((facet, field)) = view.facet {
        let discrete = match facet.bin {
            Some(_) => field.dtype == DataType::Number,
            None => field.dtype.is_nominal(),
        };
        if !discrete {
            push(
                HardRule::H7,
                format!("facet over non-discrete `{}`", field.name),
            );
        }
    }

    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::shorthand::parse;
    use std::sync::Arc;

    fn ds() -> Arc<Dataset> {
        Arc::new(Dataset::new(vec![
            FieldDef::new("q1", DataType::Number, 200).with_extent(1.0, 50.0),
            FieldDef::new("q2", DataType::Number, 200).with_extent(-3.0, 50.0),
            FieldDef::new("n", DataType::String, 6),
            FieldDef::new("t", DataType::Datetime, 100),
        ]))
    }

    fn rules(text: &str) -> Vec<HardRule> {
        let spec = parse(text, ds()).unwrap();
        validate(&spec).unwrap().into_iter().map(|v| v.rule).collect()
    }

    #[test]
    fn log_scale_on_categorical_x_is_h2() {
        assert_eq!(rules("point: x=n:log, y=q1"), vec![HardRule::H2]);
    }

    #[test]
    fn plain_scatterplot_is_valid() {
        assert!(rules("point: x=q1:linear, y=q2:linear").is_empty());
    }

    #[test]
    fn log_and_linear_on_one_channel_is_h1() {
        let mut spec = parse("point: x=q1, y=q1:log", ds()).unwrap();
        spec.scales.push(Scale::new(Channel::Y, ScaleType::Linear));
        let got: Vec<_> = validate(&spec).unwrap().into_iter().map(|v| v.rule).collect();
        assert_eq!(got, vec![HardRule::H1]);
    }

    #[test]
    fn each_rule_fires() {
        assert_eq!(rules("point: x=q2:log, y=q1"), vec![HardRule::H2]);
        assert_eq!(rules("point: x=t:log, y=q1"), vec![HardRule::H2]);
        assert_eq!(rules("point: x=q1:ordinal, y=q2"), vec![HardRule::H3]);
        assert_eq!(rules("point: x=count:categorical, y=n"), vec![HardRule::H3]);
        assert_eq!(rules("point: x=n:bin10:categorical, y=q1"), vec![HardRule::H4]);
        assert_eq!(rules("bar: color=n, size=q1"), vec![HardRule::H5]);
        assert_eq!(rules("point: x=q1, x=q2"), vec![HardRule::H6]);
        assert_eq!(rules("point: x=q1, y=q2 | row=q1"), vec![HardRule::H7]);
        assert_eq!(rules("point: x=q1, y=n:linear"), vec![HardRule::H8]);
        assert!(rules("point: x=q1, y=q2 | row=q1:bin10").is_empty());
        assert!(rules("bar: x=q1:bin10, y=count").is_empty());
        assert!(rules("point: x=q1:bin10:ordinal, y=q2").is_empty());
        assert_eq!(rules("bar: x=n, y=count:log"), vec![HardRule::H2]);
    }

    #[test]
    fn structural_errors_are_not_violations() {
        let mut spec = parse("point: x=q1, y=q2", ds()).unwrap();
        spec.marks[0].encodings[0].field = FieldRef::field("missing");
        assert_eq!(
            validate(&spec),
            Err(SpecError::UnknownField("missing".into()))
        );
        let mut spec = parse("point: x=q1, y=q2", ds()).unwrap();
        spec.scales.retain(|s| s.channel != Channel::Y);
        assert_eq!(validate(&spec), Err(SpecError::MissingScale(Channel::Y)));
        let mut spec = parse("point: x=q1, y=q2", ds()).unwrap();
        spec.marks[0].encodings[0].aggregate = Aggregate::Mean;
        spec.marks[0].encodings[0].bin = Some(10);
        assert!(matches!(validate(&spec), Err(SpecError::BadEncoding { .. })));
    }

    #[test]
    fn validation_is_deterministic() {
        let spec = parse("bar: x=n:log, y=n:ordinal, x=t:ordinal", ds()).unwrap();
        let a = validate(&spec).unwrap();
        let b = validate(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.len() >= 3);
    }
}
