//! Wire schema for edit configs exchanged with a remote interpreter.
//!
//! A response is `{"configs": [EditConfig, ...]}`. Validation is strict:
//! unknown keys and ill-typed values are reported, never repaired.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::scene::{EditConfig, Violation};

pub const SCHEMA_VERSION: &str = "1";

pub const DEFAULT_PROMPT: &str = "Decompose the driving-scene editing command into one structured config per \
     sub-command. Reply with a JSON object {\"configs\": [...]} that follows the schema exactly.";

pub const MODIFIERS: &[&str] = &[
    "wrong way", "toward me", "away from me", "fast", "slow", "normal speed", "straight", "turn left", "turn right",
    "park", "backward", "close", "far", "front", "left front", "right front", "left", "right", "back", "chasing",
];

pub const ACTIONS: &[&str] = &["add", "delete", "view_change", "revise", "abstract_expand"];
pub const RELATIONS: &[&str] = &["front", "behind", "left", "right"];
pub const SCOPES: &[&str] = &["one", "all"];
pub const EGO_MOTIONS: &[&str] = &["straight", "backward", "park"];
const TOP_KEYS: &[&str] = &["action", "target", "parameters", "round"];

#[derive(Clone, Copy)]
enum Kind {
    Str,
    Enum(&'static [&'static str]),
    Modifiers,
    Range,
    NonNeg,
    Positive,
    Real,
    Count,
    Pose,
    Ids,
}

const PARAMS: &[(&str, Kind)] = &[
    ("type", Kind::Str),
    ("color", Kind::Str),
    ("modifiers", Kind::Modifiers),
    ("relation", Kind::Enum(RELATIONS)),
    ("distance", Kind::Range),
    ("speed_mps", Kind::NonNeg),
    ("duration_s", Kind::Positive),
    ("count", Kind::Count),
    ("scope", Kind::Enum(SCOPES)),
    ("forward_m", Kind::Real),
    ("left_m", Kind::Real),
    ("up_m", Kind::Real),
    ("yaw_deg", Kind::Real),
    ("pitch_deg", Kind::Real),
    ("roll_deg", Kind::Real),
    ("ego_motion", Kind::Enum(EGO_MOTIONS)),
    ("phrase", Kind::Str),
    ("position", Kind::Pose),
    ("instance_id", Kind::Str),
    ("asset_id", Kind::Str),
    ("asset_type", Kind::Str),
    ("deleted", Kind::Ids),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("schema violation at {}", offending_keys(.0).join(", "))]
    Schema(Vec<Violation>),
    #[error("response is not JSON: {0}")]
    NotJson(String),
}

impl WireError {
    pub fn offending_keys(&self) -> Vec<String> {
        match self {
            WireError::Schema(v) => offending_keys(v),
            WireError::NotJson(_) => Vec::new(),
        }
    }
}

fn offending_keys(v: &[Violation]) -> Vec<String> {
    let mut keys: Vec<String> = v.iter().map(|x| x.field.clone()).collect();
    keys.dedup();
    keys
}

fn check_value(kind: Kind, v: &Value) -> Option<String> {
    let finite = |v: &Value| v.as_f64().filter(|x| x.is_finite());
    match kind {
        Kind::Str => (!v.as_str().is_some_and(|s| !s.is_empty())).then(|| "must be a non-empty string".to_string()),
        Kind::Enum(allowed) => (!v.as_str().is_some_and(|s| allowed.contains(&s)))
            .then(|| format!("must be one of {}", allowed.join(", "))),
        Kind::Modifiers => match v.as_array() {
            Some(a) if a.iter().all(|m| m.as_str().is_some_and(|s| MODIFIERS.contains(&s))) => None,
            _ => Some("must be a list of known modifiers".to_string()),
        },
        Kind::Range => match v.as_array().map(|a| a.iter().map(finite).collect::<Vec<_>>()).as_deref() {
            Some([Some(lo), Some(hi)]) if *lo >= 0.0 && lo < hi => None,
            _ => Some("must be [min, max] with 0 <= min < max".to_string()),
        },
        Kind::NonNeg => (!finite(v).is_some_and(|x| x >= 0.0)).then(|| "must be a number >= 0".to_string()),
        Kind::Positive => (!finite(v).is_some_and(|x| x > 0.0)).then(|| "must be a number > 0".to_string()),
        Kind::Real => finite(v).is_none().then(|| "must be a finite number".to_string()),
        Kind::Count => (!v.as_u64().is_some_and(|n| n >= 1)).then(|| "must be an integer >= 1".to_string()),
        Kind::Pose => match v.as_array().map(|a| a.iter().map(finite).collect::<Vec<_>>()).as_deref() {
            Some([Some(_), Some(_), Some(_)]) => None,
            _ => Some("must be [x, y, heading]".to_string()),
        },
        Kind::Ids => match v.as_array() {
            Some(a) if a.iter().all(Value::is_string) => None,
            _ => Some("must be a list of ids".to_string()),
        },
    }
}

/// Violations of one wire config; `path` prefixes every reported key.
pub fn validate_config(v: &Value, path: &str) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: String, rule: &str| out.push(Violation { field, rule: rule.to_string() });
    let Some(obj) = v.as_object() else {
        push(path.to_string(), "config must be an object");
        return out;
    };
    for k in obj.keys().filter(|k| !TOP_KEYS.contains(&k.as_str())) {
        push(format!("{path}.{k}"), "unknown key");
    }
    match obj.get("action") {
        None => push(format!("{path}.action"), "required key missing"),
        Some(a) if !a.as_str().is_some_and(|s| ACTIONS.contains(&s)) => {
            push(format!("{path}.action"), "must be one of add, delete, view_change, revise, abstract_expand")
        }
        _ => {}
    }
    match obj.get("round") {
        None => push(format!("{path}.round"), "required key missing"),
        Some(r) if r.as_u64().is_none_or(|n| n > u32::MAX as u64) => {
            push(format!("{path}.round"), "must be a non-negative integer")
        }
        _ => {}
    }
    if let Some(t) = obj.get("target") {
        if !(t.is_null() || t.as_str().is_some_and(|s| !s.is_empty())) {
            push(format!("{path}.target"), "must be a non-empty string or null");
        }
    }
    match obj.get("parameters") {
        None => {}
        Some(Value::Object(params)) => {
            for (k, val) in params {
                match PARAMS.iter().find(|(name, _)| name == k) {
                    None => push(format!("{path}.parameters.{k}"), "unknown key"),
                    Some((_, kind)) => {
                        if let Some(rule) = check_value(*kind, val) {
                            push(format!("{path}.parameters.{k}"), &rule);
                        }
                    }
                }
            }
        }
        Some(_) => push(format!("{path}.parameters"), "must be an object"),
    }
    out
}

/// Validates a `{"configs": [...]}` document and decodes it.
pub fn configs_from_wire(doc: &Value) -> Result<Vec<EditConfig>, WireError> {
    let mut violations = Vec::new();
    let Some(obj) = doc.as_object() else {
        return Err(WireError::Schema(alloc::vec![Violation { field: "$".into(), rule: "document must be an object".into() }]));
    };
    for k in obj.keys().filter(|k| k.as_str() != "configs") {
        violations.push(Violation { field: format!("$.{k}"), rule: "unknown key".into() });
    }
    let Some(list) = obj.get("configs").and_then(Value::as_array) else {
        violations.push(Violation { field: "$.configs".into(), rule: "required list missing".into() });
        return Err(WireError::Schema(violations));
    };
    for (i, c) in list.iter().enumerate() {
        violations.extend(validate_config(c, &format!("$.configs[{i}]")));
    }
    if !violations.is_empty() {
        return Err(WireError::Schema(violations));
    }
    list.iter()
        .enumerate()
        .map(|(i, c)| {
            serde_json::from_value(c.clone()).map_err(|e| {
                WireError::Schema(alloc::vec![Violation { field: format!("$.configs[{i}]"), rule: e.to_string() }])
            })
        })
        .collect()
}

/// Parses and validates a response body.
pub fn configs_from_wire_str(body: &str) -> Result<Vec<EditConfig>, WireError> {
    let doc: Value = serde_json::from_str(body).map_err(|e| WireError::NotJson(e.to_string()))?;
    configs_from_wire(&doc)
}

pub fn configs_to_wire(configs: &[EditConfig]) -> Value {
    json!({ "configs": configs })
}

/// Request body sent to a remote interpreter.
pub fn wire_request(prompt: &str, command: &str, round: u32) -> Value {
    json!({ "prompt": prompt, "command": command, "round": round, "schema": schema_document() })
}

/// JSON Schema of the response document.
pub fn schema_document() -> Value {
    let mut params = Map::new();
    for (name, kind) in PARAMS {
        let s = match kind {
            Kind::Str => json!({ "type": "string", "minLength": 1 }),
            Kind::Enum(e) => json!({ "enum": e }),
            Kind::Modifiers => json!({ "type": "array", "items": { "enum": MODIFIERS } }),
            Kind::Range => json!({ "type": "array", "items": { "type": "number", "minimum": 0 }, "minItems": 2, "maxItems": 2 }),
            Kind::NonNeg => json!({ "type": "number", "minimum": 0 }),
            Kind::Positive => json!({ "type": "number", "exclusiveMinimum": 0 }),
            Kind::Real => json!({ "type": "number" }),
            Kind::Count => json!({ "type": "integer", "minimum": 1 }),
            Kind::Pose => json!({ "type": "array", "items": { "type": "number" }, "minItems": 3, "maxItems": 3 }),
            Kind::Ids => json!({ "type": "array", "items": { "type": "string" } }),
        };
        params.insert(name.to_string(), s);
    }
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "EditConfig list",
        "version": SCHEMA_VERSION,
        "type": "object",
        "additionalProperties": false,
        "required": ["configs"],
        "properties": {
            "configs": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["action", "round"],
                    "properties": {
                        "action": { "enum": ACTIONS },
                        "target": { "type": ["string", "null"] },
                        "round": { "type": "integer", "minimum": 0 },
                        "parameters": { "type": "object", "additionalProperties": false, "properties": params }
                    }
                }
            }
        }
    })
}
