//! Minimal structural JSON-schema checks for the emitted artifacts. The
//! schema documents shipped under `schemas/` are the versioned contract;
//! this validator covers the subset they use: `type` (single or list),
//! `required`, `properties`, `items` and `enum`.

use serde_json::Value;

pub const TRACE_SCHEMA: &str = include_str!("../schemas/trace.v1.schema.json");
pub const SUMMARY_SCHEMA: &str = include_str!("../schemas/summary.v1.schema.json");

pub fn validate_trace(instance: &Value) -> Result<(), String> {
    validate(instance, &schema(TRACE_SCHEMA), "$")
}

pub fn validate_summary(instance: &Value) -> Result<(), String> {
    validate(instance, &schema(SUMMARY_SCHEMA), "$")
}

fn schema(text: &str) -> Value {
    serde_json::from_str(text).expect("embedded schema parses")
}

fn type_matches(instance: &Value, ty: &str) -> bool {
    match ty {
        "object" => instance.is_object(),
        "array" => instance.is_array(),
        "string" => instance.is_string(),
        "number" => instance.is_number(),
        "integer" => instance.is_i64() || instance.is_u64(),
        "boolean" => instance.is_boolean(),
        "null" => instance.is_null(),
        _ => false,
    }
}

pub fn validate(instance: &Value, schema: &Value, path: &str) -> Result<(), String> {
    let obj = match schema.as_object() {
        Some(o) => o,
        None => return Ok(()),
    };
    if let Some(tys) = obj.get("type") {
        let allowed: Vec<&str> = match tys {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(|v| v.as_str()).collect(),
            _ => vec![],
        };
        if !allowed.iter().any(|ty| type_matches(instance, ty)) {
            return Err(format!("{path}: expected type {allowed:?}"));
        }
    }
    if let Some(Value::Array(options)) = obj.get("enum") {
        if !options.contains(instance) {
            return Err(format!("{path}: value {instance} not in enum"));
        }
    }
    // `required`/`properties`/`items` only constrain matching shapes; a
    // null that passed a ["object","null"] type union is exempt.
    if let Some(map) = instance.as_object() {
        if let Some(Value::Array(required)) = obj.get("required") {
            for key in required.iter().filter_map(|v| v.as_str()) {
                if !map.contains_key(key) {
                    return Err(format!("{path}: missing required key '{key}'"));
                }
            }
        }
        if let Some(Value::Object(props)) = obj.get("properties") {
            for (key, sub) in props {
                if let Some(child) = map.get(key) {
                    validate(child, sub, &format!("{path}.{key}"))?;
                }
            }
        }
    }
    if let (Some(items), Some(arr)) = (obj.get("items"), instance.as_array()) {
        for (i, child) in arr.iter().enumerate() {
            validate(child, items, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}
