//! Resolved view of a chart spec: field references looked up, scales
//! attached to encodings. Structural checks live here; hard constraints in
//! [`super::validate`].

use super::spec::*;
use crate::error::SpecError;

/// High-cardinality threshold for discrete fields (strictly greater than).
pub const HIGH_CARDINALITY: u32 = 20;

#[derive(Debug, Clone, Copy)]
pub struct EncView<'a> {
    pub enc: &'a Encoding,
    /// `None` for the count sentinel.
    pub field: Option<&'a FieldDef>,
    /// First scale declared on the channel.
    pub scale: Option<ScaleType>,
}

impl<'a> EncView<'a> {
    pub fn channel(&self) -> Channel {
        self.enc.channel
    }

    pub fn dtype(&self) -> Option<DataType> {
        self.field.map(|f| f.dtype)
    }

    pub fn is_aggregated(&self) -> bool {
        self.enc.aggregate != Aggregate::None
    }

    /// Nominal field or binned number.
    pub fn is_discrete(&self) -> bool {
        if self.is_aggregated() {
            return false;
        }
        self.enc.bin.is_some() || self.dtype().is_some_and(DataType::is_nominal)
    }

    pub fn is_continuous(&self) -> bool {
        !self.is_discrete()
    }

    /// Distinct values drawn along this encoding, when discrete.
    pub fn discrete_cardinality(&self) -> Option<u32> {
        if !self.is_discrete() {
            return None;
        }
        match (self.enc.bin, self.field) {
            (Some(b), _) => Some(b),
            (None, Some(f)) => Some(f.cardinality),
            (None, None) => None,
        }
    }

    /// Unbinned nominal field with more than [`HIGH_CARDINALITY`] values.
    pub fn is_high_cardinality(&self) -> bool {
        !self.is_aggregated()
            && self.enc.bin.is_none()
            && self
                .field
                .is_some_and(|f| f.dtype.is_nominal() && f.cardinality > HIGH_CARDINALITY)
    }

    pub fn is_interesting(&self) -> bool {
        self.field.is_some_and(|f| f.interesting)
    }

    /// Identifier-free field-type label.
    pub fn type_token(&self) -> &'static str {
        match self.dtype() {
            None | Some(DataType::Number) => "quantitative",
            Some(DataType::Datetime) => "temporal",
            Some(DataType::String) | Some(DataType::Boolean) => "categorical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerView<'a> {
    pub mark: MarkType,
    pub encodings: Vec<EncView<'a>>,
}

impl<'a> LayerView<'a> {
    pub fn get(&self, channel: Channel) -> Option<&EncView<'a>> {
        self.encodings.iter().find(|e| e.channel() == channel)
    }

    pub fn is_aggregated(&self) -> bool {
        self.encodings.iter().any(EncView::is_aggregated)
    }

    pub fn positional(&self) -> Option<(&EncView<'a>, &EncView<'a>)> {
        Some((self.get(Channel::X)?, self.get(Channel::Y)?))
    }

    /// Continuous-by-discrete layout: `Some(overlap)` when exactly one
    /// positional channel is continuous and the other discrete.
    ///
    /// Marks overlap when the continuous side is raw data and the discrete
    /// side has fewer distinct values than there are records.
    pub fn continuous_discrete(&self, rows: u64) -> Option<bool> {
        let (x, y) = self.positional()?;
        let (cont, disc) = match (x.is_continuous(), y.is_continuous()) {
            (true, false) => (x, y),
            (false, true) => (y, x),
            _ => return None,
        };
        let distinct = u64::from(disc.discrete_cardinality().unwrap_or(1));
        Some(!self.is_aggregated() && !cont.is_aggregated() && distinct < rows)
    }
}

#[derive(Debug, Clone)]
pub struct ChartView<'a> {
    pub spec: &'a ChartSpec,
    pub layers: Vec<LayerView<'a>>,
    pub facet: Option<(&'a Facet, &'a FieldDef)>,
    pub rows: u64,
}

impl<'a> ChartView<'a> {
    /// Resolves references and checks structural well-formedness.
    pub fn new(spec: &'a ChartSpec) -> Result<Self, SpecError> {
        let ds = spec.dataset.as_ref();
        if spec.marks.is_empty() || spec.marks.len() > MAX_LAYERS {
            return Err(SpecError::LayerCount {
                got: spec.marks.len(),
                max: MAX_LAYERS,
            });
        }
        let mut layers = Vec::with_capacity(spec.marks.len());
        for mark in &spec.marks {
            if mark.encodings.is_empty() || mark.encodings.len() > MAX_ENCODINGS {
                return Err(SpecError::EncodingCount {
                    got: mark.encodings.len(),
                    max: MAX_ENCODINGS,
                });
            }
            let mut encodings = Vec::with_capacity(mark.encodings.len());
            for enc in &mark.encodings {
                let field = match &enc.field {
                    FieldRef::Count => None,
                    FieldRef::Field(name) => Some(
                        ds.field(name)
                            .ok_or_else(|| SpecError::UnknownField(name.clone()))?,
                    ),
                };
                check_encoding(enc, field)?;
                let scale = spec.scale_types(enc.channel).next();
                if scale.is_none() {
                    return Err(SpecError::MissingScale(enc.channel));
                }
                encodings.push(EncView { enc, field, scale });
            }
            layers.push(LayerView {
                mark: mark.mark,
                encodings,
            });
        }
        for s in &spec.scales {
            let used = spec
                .marks
                .iter()
                .any(|m| m.encodings.iter().any(|e| e.channel == s.channel));
            if !used {
                return Err(SpecError::OrphanScale(s.channel));
            }
        }
        let facet = match &spec.facet {
            None => None,
            Some(f) => {
                if let Some(b) = f.bin {
                    if b < 2 {
                        return Err(SpecError::BinCount(b));
                    }
                }
                let def = ds
                    .field(&f.field)
                    .ok_or_else(|| SpecError::UnknownField(f.field.clone()))?;
                Some((f, def))
            }
        };
        Ok(Self {
            spec,
            layers,
            facet,
            rows: ds.row_count(),
        })
    }

    pub fn encodings(&self) -> impl Iterator<Item = &EncView<'a>> {
        self.layers.iter().flat_map(|l| l.encodings.iter())
    }

    pub fn on(&self, channel: Channel) -> impl Iterator<Item = &EncView<'a>> {
        self.encodings().filter(move |e| e.channel() == channel)
    }

    pub fn uses(&self, channel: Channel) -> bool {
        self.on(channel).next().is_some()
    }

    pub fn scale_is(&self, channel: Channel, scale: ScaleType) -> bool {
        self.uses(channel) && self.spec.scale_types(channel).any(|s| s == scale)
    }

    pub fn facet_direction(&self) -> Option<FacetDirection> {
        self.facet.map(|(f, _)| f.direction)
    }
}

fn check_encoding(enc: &Encoding, field: Option<&FieldDef>) -> Result<(), SpecError> {
    let bad = |reason: &str| SpecError::BadEncoding {
        channel: enc.channel,
        reason: reason.to_string(),
    };
    match (field, enc.aggregate) {
        (None, Aggregate::Count) => {}
        (None, _) => return Err(bad("the count sentinel requires the count aggregate")),
        (Some(_), Aggregate::Count) => {
            return Err(bad("count aggregates use the count sentinel field"))
        }
        (Some(f), Aggregate::Mean | Aggregate::Sum) if f.dtype != DataType::Number => {
            return Err(bad("mean/sum need a number field"))
        }
        _ => {}
    }
    if let Some(b) = enc.bin {
        if enc.aggregate != Aggregate::None {
            return Err(bad("an encoding is either binned or aggregated"));
        }
        if b < 2 {
            return Err(SpecError::BinCount(b));
        }
    }
    Ok(())
}
