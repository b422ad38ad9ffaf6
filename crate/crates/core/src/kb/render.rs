//! Vega-Lite export so off-the-shelf renderers can draw a spec.
//!
//! Pinned to the Vega-Lite v5 schema. Data values are synthesized from the
//! field statistics (deterministic, capped at [`MAX_SAMPLE_ROWS`]) because
//! chart specs carry schemas, not records.

use serde_json::{json, Map, Value};

use super::spec::*;

pub const VEGA_LITE_SCHEMA: &str = "https://vega.github.io/schema/vega-lite/v5.json";
pub const MAX_SAMPLE_ROWS: u64 = 200;

pub fn to_vega_lite(spec: &ChartSpec) -> Value {
    let polar = spec.coordinates == Coordinates::Polar;
    let layers: Vec<Value> = spec
        .marks
        .iter()
        .map(|m| {
            let mut enc = Map::new();
            for e in &m.encodings {
                enc.insert(channel_name(e.channel, polar).into(), field_def(spec, e));
            }
            json!({ "mark": mark_name(m.mark, polar), "encoding": enc })
        })
        .collect();

    let body = if layers.len() == 1 {
        layers.into_iter().next().unwrap_or(Value::Null)
    } else {
        json!({ "layer": layers })
    };

    let mut doc = json!({
        "$schema": VEGA_LITE_SCHEMA,
        "data": { "values": sample_rows(&spec.dataset) },
    });
    let obj = doc.as_object_mut().expect("object literal");
    match &spec.facet {
        None => {
            if let Value::Object(b) = body {
                obj.extend(b);
            }
        }
        Some(facet) => {
            let key = match facet.direction {
                FacetDirection::Row => "row",
                FacetDirection::Col => "column",
            };
            let mut fd = json!({ "field": facet.field, "type": "nominal" });
            if let Some(b) = facet.bin {
                fd["bin"] = json!({ "maxbins": b });
                fd["type"] = json!("quantitative");
            }
            obj.insert("facet".into(), json!({ key: fd }));
            obj.insert("spec".into(), body);
        }
    }
    doc
}

fn mark_name(mark: MarkType, polar: bool) -> &'static str {
    match (mark, polar) {
        (MarkType::Bar | MarkType::Area, true) => "arc",
        _ => mark.as_str(),
    }
}

fn channel_name(channel: Channel, polar: bool) -> &'static str {
    match (channel, polar) {
        (Channel::X, true) => "theta",
        (Channel::Y, true) => "radius",
        _ => channel.as_str(),
    }
}

fn field_def(spec: &ChartSpec, e: &Encoding) -> Value {
    let scale = spec.scale_types(e.channel).next();
    let mut fd = Map::new();
    if let FieldRef::Field(name) = &e.field {
        fd.insert("field".into(), json!(name));
    }
    let dtype = match &e.field {
        FieldRef::Field(n) => spec.dataset.field(n).map(|f| f.dtype),
        FieldRef::Count => None,
    };
    let vtype = match (dtype, scale) {
        (Some(DataType::Datetime), _) if e.aggregate == Aggregate::None => "temporal",
        (Some(d), Some(ScaleType::Ordinal)) if d.is_nominal() => "ordinal",
        (Some(d), _) if d.is_nominal() => "nominal",
        (_, Some(ScaleType::Ordinal)) if e.bin.is_none() => "ordinal",
        _ => "quantitative",
    };
    fd.insert("type".into(), json!(vtype));
    if e.aggregate != Aggregate::None {
        fd.insert("aggregate".into(), json!(e.aggregate.as_str()));
    }
    if let Some(b) = e.bin {
        fd.insert("bin".into(), json!({ "maxbins": b }));
    }
    if let Some(s @ (ScaleType::Linear | ScaleType::Log)) = scale {
        if vtype != "nominal" && vtype != "ordinal" {
            fd.insert("scale".into(), json!({ "type": s.as_str() }));
        }
    }
    match e.stack {
        Stack::None => {}
        s => {
            fd.insert("stack".into(), json!(s.as_str()));
        }
    }
    Value::Object(fd)
}

fn sample_rows(ds: &Dataset) -> Vec<Value> {
    let n = ds.row_count().clamp(1, MAX_SAMPLE_ROWS);
    (0..n)
        .map(|i| {
            let mut row = Map::new();
            for f in &ds.fields {
                let card = u64::from(f.cardinality.max(1));
                // a stride coprime-ish with small cardinalities spreads values
                let k = (i * 7 + i / card) % card;
                let frac = if card > 1 { k as f64 / (card - 1) as f64 } else { 0.0 };
                let (lo, hi) = f.extent.map(|e| (e.min, e.max)).unwrap_or((0.0, card as f64));
                let v = match f.dtype {
                    DataType::Number => json!(lo + (hi - lo) * frac),
                    DataType::String => json!(format!("{}_{}", f.name, k)),
                    DataType::Boolean => json!(k % 2 == 0),
                    DataType::Datetime => {
                        let secs = (lo + (hi - lo) * frac) as i64;
                        let ts = chrono::DateTime::from_timestamp(secs, 0).unwrap_or_default();
                        json!(ts.format("%Y-%m-%dT%H:%M:%S").to_string())
                    }
                };
                row.insert(f.name.clone(), v);
            }
            Value::Object(row)
        })
        .collect()
}
