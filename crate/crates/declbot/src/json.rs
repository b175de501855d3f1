//! Conversions between engine values and JSON.

use declbot_core::{Record, Value};
use serde_json::{Map, Number, Value as Json};

/// Non-finite numbers have no JSON form and become `null`.
pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Bool(b) => Json::Bool(*b),
        Value::Number(x) => Number::from_f64(*x).map_or(Json::Null, Json::Number),
        Value::Str(s) => Json::String(s.to_string()),
        Value::List(items) => Json::Array(items.iter().map(value_to_json).collect()),
        Value::Record(r) => Json::Object(
            r.iter()
                .map(|(k, v)| (k.clone(), value_to_json(v)))
                .collect::<Map<_, _>>(),
        ),
    }
}

pub fn json_to_value(j: &Json) -> Value {
    match j {
        Json::Null => Value::Null,
        Json::Bool(b) => Value::Bool(*b),
        Json::Number(n) => Value::Number(n.as_f64().unwrap_or(f64::NAN)),
        Json::String(s) => Value::str(s.as_str()),
        Json::Array(items) => Value::list(items.iter().map(json_to_value)),
        Json::Object(m) => Value::from(
            m.iter()
                .map(|(k, v)| (k.clone(), json_to_value(v)))
                .collect::<Record>(),
        ),
    }
}

pub fn record_to_json(r: &Record) -> Json {
    Json::Object(
        r.iter()
            .map(|(k, v)| (k.clone(), value_to_json(v)))
            .collect(),
    )
}
