//! Reference expressions such as "the added Mini" or "the red car", and their
//! resolution against the scene history.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::Value;

use super::{lexicon, tokenize, DslError, Tok};
use crate::assets::{color_by_name, color_distance, COLOR_TOLERANCE};
use crate::scene::{EditAction, PlacedVehicle, SceneState};

const DETERMINERS: &[&str] = &["the", "that", "this"];
const RECENCY: &[&str] = &["added", "new", "inserted", "previous", "last"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reference {
    /// Refers to a vehicle added by an earlier edit.
    pub added: bool,
    pub color: Option<String>,
    /// Canonical type; `None` for generic nouns.
    pub vehicle_type: Option<String>,
}

impl Reference {
    pub fn canonical(&self) -> String {
        let mut parts: Vec<&str> = alloc::vec!["the"];
        if self.added {
            parts.push("added");
        }
        if let Some(c) = &self.color {
            parts.push(c);
        }
        parts.push(self.vehicle_type.as_deref().unwrap_or("car"));
        parts.join(" ")
    }

    fn type_matches(&self, ty: Option<&str>) -> bool {
        match (&self.vehicle_type, ty) {
            (None, _) => true,
            (Some(want), Some(got)) => want.eq_ignore_ascii_case(got),
            (Some(_), None) => false,
        }
    }

    fn color_matches(&self, v: &PlacedVehicle) -> bool {
        let Some(name) = &self.color else { return true };
        let by_name = v.attributes.get("color_name").and_then(Value::as_str) == Some(name.as_str());
        let by_value = match (color_by_name(name), v.color()) {
            (Some(want), Some(got)) => color_distance(want, got) <= COLOR_TOLERANCE,
            _ => false,
        };
        by_name || by_value
    }
}

/// Parses `the [added] [color] (type | car)` or `it` at the start of `toks`;
/// returns the reference and the number of tokens consumed.
pub fn parse_reference(toks: &[Tok]) -> Option<(Reference, usize)> {
    let word = |i: usize| match toks.get(i) {
        Some(Tok::Word(w)) => Some(w.as_str()),
        _ => None,
    };
    if word(0) == Some("it") {
        return Some((Reference { added: true, color: None, vehicle_type: None }, 1));
    }
    if !word(0).is_some_and(|w| DETERMINERS.contains(&w)) {
        return None;
    }
    let mut i = 1;
    let mut added = false;
    if word(i).is_some_and(|w| RECENCY.contains(&w)) {
        added = true;
        i += 1;
    }
    let mut color = None;
    if let Some(w) = word(i).filter(|w| color_by_name(w).is_some()) {
        color = Some(w.to_string());
        i += 1;
    }
    let rest: Vec<&str> = toks[i..].iter().map_while(|t| match t {
        Tok::Word(w) => Some(w.as_str()),
        _ => None,
    }).collect();
    if let Some((ty, n)) = lexicon::canonical_type(&rest) {
        return Some((Reference { added, color, vehicle_type: Some(ty.to_string()) }, i + n));
    }
    if rest.first().is_some_and(|w| lexicon::GENERIC_VEHICLES.contains(w)) {
        return Some((Reference { added, color, vehicle_type: None }, i + 1));
    }
    None
}

fn describe(v: &PlacedVehicle) -> String {
    format!("{} ({})", v.instance_id, v.vehicle_type().unwrap_or("vehicle"))
}

/// Resolves a reference expression to a live vehicle id.
///
/// History is searched newest first for add edits whose vehicle is still in
/// the scene. Expressions without "added" fall back to the vehicles present
/// in the scene, nearest to the ego first.
pub fn resolve_reference(expr: &str, state: &SceneState) -> Result<String, DslError> {
    let unresolved = || DslError::UnresolvedReference {
        expr: expr.to_string(),
        candidates: state.vehicles.iter().map(describe).collect(),
    };
    let toks = tokenize(expr).map_err(|_| unresolved())?;
    let r = match parse_reference(&toks) {
        Some((r, n)) if n == toks.len() => r,
        _ => return Err(unresolved()),
    };
    for cfg in state.history.iter().rev() {
        if cfg.action != EditAction::Add {
            continue;
        }
        let Some(id) = cfg.param_str("instance_id") else { continue };
        let Some(v) = state.vehicle(id) else { continue };
        if state.deleted_ids.contains(id) {
            continue;
        }
        let ty = cfg.param_str("asset_type").or(cfg.param_str("type")).or(v.vehicle_type());
        let requested = cfg.param_str("type");
        if (r.type_matches(ty) || r.type_matches(requested)) && r.color_matches(v) {
            return Ok(id.to_string());
        }
    }
    if r.added {
        return Err(unresolved());
    }
    let ego = state.ego.samples.first().map(|s| s.pose().position()).unwrap_or_default();
    state
        .vehicles
        .iter()
        .filter(|v| r.type_matches(v.vehicle_type()) && r.color_matches(v))
        .min_by(|a, b| {
            let da = a.pose.position().distance(ego);
            let db = b.pose.position().distance(ego);
            da.total_cmp(&db).then_with(|| a.instance_id.cmp(&b.instance_id))
        })
        .map(|v| v.instance_id.clone())
        .ok_or_else(unresolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Option<(Reference, usize)> {
        parse_reference(&tokenize(s).unwrap())
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(parse("the added Mini to").unwrap().0.canonical(), "the added Mini");
        assert_eq!(parse("the red vehicle").unwrap(), (Reference { added: false, color: Some("red".into()), vehicle_type: None }, 3));
        assert_eq!(parse("it").unwrap().0.canonical(), "the added car");
        assert_eq!(parse("the police car").unwrap().1, 3);
        assert!(parse("the left").is_none());
        assert!(parse("a car").is_none());
    }
}
