//! Compact text notation for chart specs, used by tests, the CLI listing and
//! logs.
//!
//! ```text
//! [polar] MARK: CH=FIELD[:OPT]*, ... [+ MARK: ...] [| row|col=FIELD[:binN]]
//! ```
//!
//! `FIELD` is a dataset field name or `count`. Options are an aggregate
//! (`mean`, `sum`), a bin count (`bin10`), a scale type (`linear`, `log`,
//! `ordinal`, `categorical`) or a stack mode (`stack`, `normalize`). Without an
//! explicit scale, nominal fields get `categorical` and everything else
//! `linear`.

use std::fmt;
use std::sync::Arc;

use super::spec::*;
use crate::error::KbError;

pub fn parse(text: &str, dataset: Arc<Dataset>) -> Result<ChartSpec, KbError> {
    let err = |m: String| KbError::Shorthand(m);
    let mut rest = text.trim();
    let mut coordinates = Coordinates::Cartesian;
    if let Some(r) = rest.strip_prefix("polar ") {
        coordinates = Coordinates::Polar;
        rest = r.trim_start();
    }
    let (body, facet_text) = match rest.split_once('|') {
        Some((b, f)) => (b.trim(), Some(f.trim())),
        None => (rest, None),
    };

    let mut marks = Vec::new();
    let mut scales: Vec<Scale> = Vec::new();
    for layer in body.split('+') {
        let (mark, encs) = layer
            .split_once(':')
            .ok_or_else(|| err(format!("layer `{}` lacks `mark:`", layer.trim())))?;
        let mark = MarkType::parse(mark.trim())
            .ok_or_else(|| err(format!("unknown mark `{}`", mark.trim())))?;
        let mut encodings = Vec::new();
        for enc_text in encs.split(',') {
            let (enc, scale) = parse_encoding(enc_text.trim(), &dataset)?;
            let scale = Scale::new(enc.channel, scale);
            if !scales.contains(&scale) {
                scales.push(scale);
            }
            encodings.push(enc);
        }
        marks.push(Mark::new(mark, encodings));
    }

    let facet = match facet_text {
        None => None,
        Some(t) => {
            let (dir, field) = t
                .split_once('=')
                .ok_or_else(|| err(format!("facet `{t}` lacks `=`")))?;
            let direction = match dir.trim() {
                "row" => FacetDirection::Row,
                "col" => FacetDirection::Col,
                d => return Err(err(format!("unknown facet direction `{d}`"))),
            };
            let mut parts = field.trim().split(':');
            let name = parts.next().unwrap_or_default().to_string();
            let mut bin = None;
            for opt in parts {
                bin = Some(parse_bin(opt).ok_or_else(|| err(format!("bad facet option `{opt}`")))?);
            }
            Some(Facet {
                direction,
                field: name,
                bin,
            })
        }
    };

    Ok(ChartSpec {
        dataset,
        coordinates,
        marks,
        scales,
        facet,
    })
}

fn parse_bin(opt: &str) -> Option<u32> {
    opt.strip_prefix("bin")?.parse().ok()
}

fn parse_encoding(text: &str, dataset: &Dataset) -> Result<(Encoding, ScaleType), KbError> {
    let err = |m: String| KbError::Shorthand(m);
    let (channel, rest) = text
        .split_once('=')
        .ok_or_else(|| err(format!("encoding `{text}` lacks `=`")))?;
    let channel = Channel::parse(channel.trim())
        .ok_or_else(|| err(format!("unknown channel `{}`", channel.trim())))?;
    let mut parts = rest.split(':').map(str::trim);
    let field = match parts.next().unwrap_or_default() {
        "count" | COUNT_FIELD => FieldRef::Count,
        name => FieldRef::field(name),
    };
    let mut enc = Encoding::new(channel, field);
    let mut scale = None;
    for opt in parts {
        match opt {
            "mean" => enc.aggregate = Aggregate::Mean,
            "sum" => enc.aggregate = Aggregate::Sum,
            "count" => enc.aggregate = Aggregate::Count,
            "stack" => enc.stack = Stack::Zero,
            "normalize" => enc.stack = Stack::Normalize,
            o => {
                if let Some(t) = ScaleType::parse(o) {
                    scale = Some(t);
                } else if let Some(b) = parse_bin(o) {
                    enc.bin = Some(b);
                } else {
                    return Err(err(format!("unknown option `{o}`")));
                }
            }
        }
    }
    let scale = scale.unwrap_or_else(|| {
        let nominal = match &enc.field {
            FieldRef::Field(n) => dataset.field(n).is_some_and(|f| f.dtype.is_nominal()),
            FieldRef::Count => false,
        };
        if nominal && enc.aggregate == Aggregate::None {
            ScaleType::Categorical
        } else {
            ScaleType::Linear
        }
    });
    Ok((enc, scale))
}

impl fmt::Display for ChartSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coordinates == Coordinates::Polar {
            f.write_str("polar ")?;
        }
        for (i, mark) in self.marks.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}: ", mark.mark.as_str())?;
            for (j, enc) in mark.encodings.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                let field = match &enc.field {
                    FieldRef::Count => "count",
                    FieldRef::Field(n) => n,
                };
                write!(f, "{}={}", enc.channel, field)?;
                if !matches!(enc.aggregate, Aggregate::None | Aggregate::Count) {
                    write!(f, ":{}", enc.aggregate.as_str())?;
                }
                if let Some(b) = enc.bin {
                    write!(f, ":bin{b}")?;
                }
                match enc.stack {
                    Stack::None => {}
                    Stack::Zero => f.write_str(":stack")?,
                    Stack::Normalize => f.write_str(":normalize")?,
                }
                if let Some(s) = self.scale_types(enc.channel).next() {
                    write!(f, ":{}", s.as_str())?;
                }
            }
        }
        if let Some(facet) = &self.facet {
            write!(f, " | {}={}", facet.direction.as_str(), facet.field)?;
            if let Some(b) = facet.bin {
                write!(f, ":bin{b}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> Arc<Dataset> {
        Arc::new(Dataset::new(vec![
            FieldDef::new("q", DataType::Number, 50).with_extent(1.0, 2.0),
            FieldDef::new("n", DataType::String, 5),
        ]))
    }

    #[test]
    fn parses_layers_and_facet() {
        let spec = parse("polar bar: x=n, y=q:mean:log + point: x=n, y=count | col=q:bin10", ds())
            .unwrap();
        assert_eq!(spec.coordinates, Coordinates::Polar);
        assert_eq!(spec.marks.len(), 2);
        assert_eq!(spec.marks[0].encodings[1].aggregate, Aggregate::Mean);
        assert_eq!(spec.marks[1].encodings[1].field, FieldRef::Count);
        // x categorical shared, y log + y linear from the two layers
        assert_eq!(spec.scales.len(), 3);
        assert_eq!(spec.facet.as_ref().unwrap().bin, Some(10));
    }

    #[test]
    fn display_reparses_to_same_design() {
        let text = "area: x=q:bin25:linear, y=count:linear, color=n:categorical | row=n";
        let spec = parse(text, ds()).unwrap();
        assert_eq!(spec.to_string(), text);
        let again = parse(&spec.to_string(), ds()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("blob: x=q", ds()).is_err());
        assert!(parse("point: w=q", ds()).is_err());
        assert!(parse("point: x=q:sparkly", ds()).is_err());
        assert!(parse("point x=q", ds()).is_err());
    }
}
