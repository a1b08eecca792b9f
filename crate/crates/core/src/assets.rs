//! Vehicle asset metadata: normalization, attribute matching and recolor.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::Rgb;

pub const PAINT_MATERIAL: &str = "car_paint";
pub const COLOR_TOLERANCE: f64 = 0.2;
pub const LENGTH_BOUNDS: (f64, f64) = (1.0, 25.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssetError {
    #[error("asset '{0}' has no dimensions")]
    MissingDimensions(String),
    #[error("asset '{id}' length {length} m is outside {lo}-{hi} m; wrong units?")]
    ImplausibleLength { id: String, length: f64, lo: f64, hi: f64 },
    #[error("asset '{0}' has non-positive dimensions")]
    NonPositiveDimensions(String),
    #[error("asset '{0}' has no paint material")]
    MissingPaint(String),
    #[error("asset bank is empty")]
    EmptyBank,
    #[error("unknown asset '{0}'")]
    Unknown(String),
}

/// Length, width, height in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub asset_type: String,
    pub color: Rgb,
    #[serde(default)]
    pub dimensions: Option<Dimensions>,
    #[serde(default)]
    pub origin_at_bottom_center: bool,
    #[serde(default)]
    pub faces_plus_x: bool,
    #[serde(default)]
    pub paint_material: Option<String>,
    #[serde(default)]
    pub mesh_path: String,
}

impl AssetRecord {
    pub fn length(&self) -> f64 {
        self.dimensions.map_or(4.5, |d| d.length)
    }
}

/// Checks and repairs the normalization flags; returns the repaired record
/// and one note per repair.
pub fn normalize_asset(record: &AssetRecord) -> Result<(AssetRecord, Vec<String>), AssetError> {
    let dims = record.dimensions.ok_or_else(|| AssetError::MissingDimensions(record.id.clone()))?;
    if !(dims.length > 0.0 && dims.width > 0.0 && dims.height > 0.0) {
        return Err(AssetError::NonPositiveDimensions(record.id.clone()));
    }
    if dims.length < LENGTH_BOUNDS.0 || dims.length > LENGTH_BOUNDS.1 {
        return Err(AssetError::ImplausibleLength {
            id: record.id.clone(),
            length: dims.length,
            lo: LENGTH_BOUNDS.0,
            hi: LENGTH_BOUNDS.1,
        });
    }
    let mut out = record.clone();
    let mut notes = Vec::new();
    if !out.origin_at_bottom_center {
        out.origin_at_bottom_center = true;
        notes.push("origin moved to bottom center".to_string());
    }
    if !out.faces_plus_x {
        out.faces_plus_x = true;
        notes.push("rotated to face +x".to_string());
    }
    if out.paint_material.as_deref() != Some(PAINT_MATERIAL) {
        out.paint_material = Some(PAINT_MATERIAL.to_string());
        notes.push("paint material renamed to car_paint".to_string());
    }
    Ok((out, notes))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetRequest {
    #[serde(rename = "type")]
    pub asset_type: Option<String>,
    pub color: Option<Rgb>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssetMatch {
    pub record: AssetRecord,
    pub needs_recolor: bool,
}

pub fn color_distance(a: Rgb, b: Rgb) -> f64 {
    let d = a.zip(b, |x, y| x - y);
    (d.r * d.r + d.g * d.g + d.b * d.b).sqrt()
}

fn type_matches(record: &AssetRecord, wanted: &str) -> bool {
    record.asset_type.eq_ignore_ascii_case(wanted)
}

/// Highest `2·type + 1·color` score wins; ties go to the smallest id.
pub fn match_asset(request: &AssetRequest, bank: &[AssetRecord]) -> Result<AssetMatch, AssetError> {
    let mut best: Option<(&AssetRecord, u32)> = None;
    for r in bank {
        let mut score = 0;
        if request.asset_type.as_deref().is_some_and(|t| type_matches(r, t)) {
            score += 2;
        }
        if request.color.is_some_and(|c| color_distance(c, r.color) <= COLOR_TOLERANCE) {
            score += 1;
        }
        let better = match best {
            None => true,
            Some((b, bs)) => score > bs || (score == bs && r.id < b.id),
        };
        if better {
            best = Some((r, score));
        }
    }
    let (record, _) = best.ok_or(AssetError::EmptyBank)?;
    let needs_recolor = request.color.is_some_and(|c| color_distance(c, record.color) > COLOR_TOLERANCE);
    Ok(AssetMatch { record: record.clone(), needs_recolor })
}

/// Sets the base color of the paint material.
pub fn recolor(record: &AssetRecord, color: Rgb) -> Result<AssetRecord, AssetError> {
    if record.paint_material.is_none() {
        return Err(AssetError::MissingPaint(record.id.clone()));
    }
    Ok(AssetRecord { color, ..record.clone() })
}

const fn css(r: u8, g: u8, b: u8) -> Rgb {
    Rgb::new(r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0)
}

/// Basic CSS color keywords.
pub const COLOR_TABLE: &[(&str, Rgb)] = &[
    ("black", css(0, 0, 0)),
    ("silver", css(192, 192, 192)),
    ("gray", css(128, 128, 128)),
    ("grey", css(128, 128, 128)),
    ("white", css(255, 255, 255)),
    ("maroon", css(128, 0, 0)),
    ("red", css(255, 0, 0)),
    ("purple", css(128, 0, 128)),
    ("fuchsia", css(255, 0, 255)),
    ("green", css(0, 128, 0)),
    ("lime", css(0, 255, 0)),
    ("olive", css(128, 128, 0)),
    ("yellow", css(255, 255, 0)),
    ("navy", css(0, 0, 128)),
    ("blue", css(0, 0, 255)),
    ("teal", css(0, 128, 128)),
    ("aqua", css(0, 255, 255)),
    ("orange", css(255, 165, 0)),
];

pub fn color_by_name(name: &str) -> Option<Rgb> {
    COLOR_TABLE.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, c)| *c)
}

/// Nearest basic color name.
pub fn color_name(c: Rgb) -> &'static str {
    COLOR_TABLE
        .iter()
        .map(|(n, k)| (n, color_distance(*k, c)))
        .fold(("black", f64::INFINITY), |acc, (n, d)| if d < acc.1 { (*n, d) } else { acc })
        .0
}

/// Read-mostly collection of asset records keyed by id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssetBank {
    pub records: Vec<AssetRecord>,
}

impl AssetBank {
    pub fn new(mut records: Vec<AssetRecord>) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        AssetBank { records }
    }

    pub fn get(&self, id: &str) -> Option<&AssetRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Types known to the bank, lowercased.
    pub fn types(&self) -> Vec<String> {
        let mut t: Vec<String> = self.records.iter().map(|r| r.asset_type.to_lowercase()).collect();
        t.sort();
        t.dedup();
        t
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
