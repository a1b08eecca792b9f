//! Motion attributes of add and revise configs.

use alloc::string::{String, ToString};

use super::{lexicon, DslError};
use crate::motion::{DrivingDirection, MotionAction, MotionAttributes, Sector};
use crate::scene::{EditAction, EditConfig};

fn set<T: Copy + PartialEq>(slot: &mut Option<(T, String)>, v: T, word: &str, what: &str) -> Result<(), DslError> {
    match slot {
        Some((old, first)) if *old != v => Err(DslError::Ambiguous {
            what: what.to_string(),
            first: first.clone(),
            second: word.to_string(),
        }),
        _ => {
            *slot = Some((v, word.to_string()));
            Ok(())
        }
    }
}

fn pair(cfg: &EditConfig, key: &str) -> Result<Option<(f64, f64)>, DslError> {
    let Some(v) = cfg.parameters.get(key) else { return Ok(None) };
    let bad = || DslError::BadParameter(key.to_string());
    let a = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
    let lo = a[0].as_f64().ok_or_else(bad)?;
    let hi = a[1].as_f64().ok_or_else(bad)?;
    if !(lo >= 0.0 && lo < hi) {
        return Err(bad());
    }
    Ok(Some((lo, hi)))
}

fn number(cfg: &EditConfig, key: &str) -> Result<Option<f64>, DslError> {
    match cfg.parameters.get(key) {
        None => Ok(None),
        Some(v) => v.as_f64().filter(|x| *x >= 0.0).map(Some).ok_or_else(|| DslError::BadParameter(key.to_string())),
    }
}

/// Attribute a modifier sets; modifiers of one category exclude each other.
pub fn modifier_category(m: &str) -> &'static str {
    match m {
        "wrong way" => "mode",
        "toward me" | "away from me" => "direction",
        "fast" | "slow" | "normal speed" => "speed",
        "straight" | "turn left" | "turn right" | "park" | "backward" => "action",
        "close" | "far" => "distance",
        "chasing" => "chasing",
        _ => "position",
    }
}

/// Modifiers of `base` overridden category-wise by `update`.
pub fn merge_modifiers(base: &[String], update: &[String]) -> alloc::vec::Vec<String> {
    let mut out: alloc::vec::Vec<String> =
        base.iter().filter(|b| !update.iter().any(|u| modifier_category(u) == modifier_category(b))).cloned().collect();
    out.extend(update.iter().cloned());
    out
}

/// Maps the modifiers and numeric parameters of an add (or revise) config to
/// motion attributes; unspecified attributes keep their defaults.
pub fn extract_motion_attributes(cfg: &EditConfig) -> Result<MotionAttributes, DslError> {
    if !matches!(cfg.action, EditAction::Add | EditAction::Revise) {
        return Err(DslError::WrongAction { expected: "add", got: cfg.action });
    }
    let mut direction = None;
    let mut speed = None;
    let mut action = None;
    let mut sector = None;
    let mut range = None;
    let mut crazy = false;
    let mut chasing = false;
    for m in cfg.param_strings("modifiers") {
        let w = m.as_str();
        match w {
            "wrong way" => crazy = true,
            "toward me" => set(&mut direction, DrivingDirection::TowardEgo, w, "direction")?,
            "away from me" => set(&mut direction, DrivingDirection::AwayFromEgo, w, "direction")?,
            "fast" | "slow" | "normal speed" => set(&mut speed, lexicon::speed_for(w).unwrap_or_default(), w, "speed")?,
            "straight" => set(&mut action, MotionAction::Straightforward, w, "action")?,
            "turn left" => set(&mut action, MotionAction::TurnLeft, w, "action")?,
            "turn right" => set(&mut action, MotionAction::TurnRight, w, "action")?,
            "park" => set(&mut action, MotionAction::Park, w, "action")?,
            "backward" => set(&mut action, MotionAction::Backward, w, "action")?,
            "close" => set(&mut range, lexicon::CLOSE_RANGE, w, "distance")?,
            "far" => set(&mut range, lexicon::FAR_RANGE, w, "distance")?,
            "front" => set(&mut sector, Sector::Front, w, "position")?,
            "left front" => set(&mut sector, Sector::LeftFront, w, "position")?,
            "right front" => set(&mut sector, Sector::RightFront, w, "position")?,
            "left" => set(&mut sector, Sector::Left, w, "position")?,
            "right" => set(&mut sector, Sector::Right, w, "position")?,
            "back" => set(&mut sector, Sector::Back, w, "position")?,
            "chasing" => chasing = true,
            _ => return Err(DslError::BadParameter(alloc::format!("modifiers: '{w}'"))),
        }
    }
    let mut out = MotionAttributes::default();
    if chasing && sector.is_none() && cfg.param_str("relation").is_none() {
        sector = Some((Sector::Back, "chasing".to_string()));
        if direction.is_none() {
            direction = Some((DrivingDirection::AwayFromEgo, "chasing".to_string()));
        }
    }
    out.crazy_mode = crazy;
    out.driving_direction = direction.map(|d| d.0);
    if let Some((s, _)) = sector {
        out.sector = s;
    }
    if let Some((a, _)) = action {
        out.action = a;
    }
    out.speed = match number(cfg, "speed_mps")? {
        Some(v) => v,
        None => speed.map_or(out.speed, |s| s.0),
    };
    out.distance_range = match pair(cfg, "distance")? {
        Some(p) => Some(p),
        None => range.map(|r| r.0),
    };
    if let Some(d) = number(cfg, "duration_s")? {
        if d == 0.0 {
            return Err(DslError::BadParameter("duration_s".to_string()));
        }
        out.duration = d;
    }
    Ok(out)
}
