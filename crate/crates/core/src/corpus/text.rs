use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};

use super::types::FilingRecord;

/// Canonical embedding text for a record: a JSON object holding the table id
/// and the non-null fields, keys ascending, numbers normalized so that `100`
/// and `100.0` render identically. List element order is kept.
pub fn to_embedding_text(record: &FilingRecord) -> String {
    let fields: Map<String, Value> = record
        .fields
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, v)| (k.clone(), canonical_value(v)))
        .collect();
    let mut doc = BTreeMap::new();
    doc.insert("fields", Value::Object(fields));
    doc.insert("table_id", Value::String(record.table_id.clone()));
    serde_json::to_string(&doc).expect("json values always serialize")
}

/// Normalizes numbers (integral values become integers) and drops nulls from
/// nested objects. serde_json's default map is ordered, so keys come out sorted.
pub fn canonical_value(v: &Value) -> Value {
    match v {
        Value::Number(n) => Value::Number(canonical_number(n)),
        Value::Array(items) => Value::Array(items.iter().map(canonical_value).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k.clone(), canonical_value(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

fn canonical_number(n: &Number) -> Number {
    if n.is_i64() || n.is_u64() {
        return n.clone();
    }
    let x = n.as_f64().unwrap_or(0.0);
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Number::from(x as i64)
    } else {
        Number::from_f64(x).unwrap_or_else(|| n.clone())
    }
}
