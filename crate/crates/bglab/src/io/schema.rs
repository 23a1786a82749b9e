//! Structural validation of emitted JSON against the schema files shipped
//! under `schemas/`. The dialect is the subset the reports need: `type`,
//! `properties`, `required`, `items`, `enum`, `additionalProperties`.

use crate::error::{Error, Result};
use serde_json::Value;

pub const SWEEP_REPORT_SCHEMA: &str = include_str!("../../schemas/sweep_report.schema.json");
pub const BALANCE_REPORT_SCHEMA: &str = include_str!("../../schemas/balance_report.schema.json");
pub const MANIFEST_SCHEMA: &str = include_str!("../../schemas/manifest.schema.json");

fn type_matches(value: &Value, ty: &str) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        "integer" => {
            value.is_i64() || value.is_u64() || value.as_f64().is_some_and(|f| f.fract() == 0.0)
        }
        _ => false,
    }
}

fn check(value: &Value, schema: &Value, path: &str, errors: &mut Vec<String>) {
    let Some(obj) = schema.as_object() else {
        return;
    };
    if let Some(ty) = obj.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(list) => list.iter().filter_map(|v| v.as_str()).collect(),
            _ => vec![],
        };
        if !allowed.is_empty() && !allowed.iter().any(|t| type_matches(value, t)) {
            errors.push(format!("{path}: expected type {allowed:?}"));
            return;
        }
    }
    if let Some(options) = obj.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            errors.push(format!("{path}: value {value} not in enum"));
            return;
        }
    }
    if let (Some(map), Some(props)) = (value.as_object(), obj.get("properties")) {
        if let Some(required) = obj.get("required").and_then(Value::as_array) {
            for name in required.iter().filter_map(Value::as_str) {
                if !map.contains_key(name) {
                    errors.push(format!("{path}: missing required key '{name}'"));
                }
            }
        }
        let props = props.as_object().cloned().unwrap_or_default();
        if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
            for key in map.keys() {
                if !props.contains_key(key) {
                    errors.push(format!("{path}: unexpected key '{key}'"));
                }
            }
        }
        for (key, sub) in &props {
            if let Some(v) = map.get(key) {
                check(v, sub, &format!("{path}.{key}"), errors);
            }
        }
    }
    if let (Some(list), Some(items)) = (value.as_array(), obj.get("items")) {
        for (k, v) in list.iter().enumerate() {
            check(v, items, &format!("{path}[{k}]"), errors);
        }
    }
}

/// All structural mismatches between `value` and `schema`.
pub fn validate_against_schema(value: &Value, schema: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(value, schema, "$", &mut errors);
    errors
}

/// Validate a JSON document against one of the shipped schema texts.
pub fn check_schema(value: &Value, schema_text: &str) -> Result<()> {
    let schema: Value = serde_json::from_str(schema_text)
        .map_err(|e| Error::Format(format!("schema decode: {e}")))?;
    let errors = validate_against_schema(value, &schema);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "schema validation failed: {}",
            errors.join("; ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn accepts_matching_document() {
        let schema = json!({
            "type": "object",
            "required": ["a", "b"],
            "properties": {
                "a": {"type": "integer"},
                "b": {"type": "array", "items": {"type": "string"}}
            }
        });
        let doc = json!({"a": 3, "b": ["x", "y"]});
        assert!(validate_against_schema(&doc, &schema).is_empty());
    }

    #[test]
    fn reports_missing_and_mistyped() {
        let schema = json!({
            "type": "object",
            "required": ["a"],
            "properties": {"a": {"type": "number"}}
        });
        let errors = validate_against_schema(&json!({"a": "oops"}), &schema);
        assert_eq!(errors.len(), 1);
        let errors = validate_against_schema(&json!({}), &schema);
        assert!(errors[0].contains("missing required key 'a'"));
    }

    #[test]
    fn enum_and_additional_properties() {
        let schema = json!({
            "type": "object",
            "additionalProperties": false,
            "properties": {"mode": {"enum": ["a", "b"]}}
        });
        assert!(validate_against_schema(&json!({"mode": "a"}), &schema).is_empty());
        assert!(!validate_against_schema(&json!({"mode": "c"}), &schema).is_empty());
        assert!(!validate_against_schema(&json!({"other": 1}), &schema).is_empty());
    }

    #[test]
    fn shipped_schemas_parse() {
        for text in [SWEEP_REPORT_SCHEMA, BALANCE_REPORT_SCHEMA, MANIFEST_SCHEMA] {
            let _: Value = serde_json::from_str(text).unwrap();
        }
    }
}
