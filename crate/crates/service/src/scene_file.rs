//! Scene files and asset banks on disk.
//!
//! A scene file is JSON. Lane maps and the skydome may live in sibling files;
//! relative paths resolve against the scene file's directory. The reference
//! `demo` names the built-in demo scene.

use std::path::{Path, PathBuf};

use drivesim_core::assets::{normalize_asset, AssetBank, AssetRecord};
use drivesim_core::demo::{demo_bank, demo_scene};
use drivesim_core::photometry::fields::BoxField;
use drivesim_core::scene::{
    validate_scene, CameraRig, ExposureStats, LaneMap, LaneNode, PlacedVehicle, SceneState, Trajectory, Violation,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{self, FormatError};

pub const SCENE_VERSION: &str = "1";
pub const DEMO_SCENE: &str = "demo";

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("unsupported scene file version '{0}' (expected {SCENE_VERSION})")]
    Version(String),
    #[error("scene is invalid: {}", describe(.0))]
    Invalid(Vec<Violation>),
    #[error("asset '{id}': {message}")]
    Asset { id: String, message: String },
}

fn describe(v: &[Violation]) -> String {
    v.iter().map(|v| format!("{}: {}", v.field, v.rule)).collect::<Vec<_>>().join("; ")
}

/// Lane map given inline or as a path to a lane-node list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LaneMapSource {
    Path(String),
    Nodes(Vec<LaneNode>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub version: String,
    pub lane_map: LaneMapSource,
    pub cameras: CameraRig,
    pub ego: Trajectory,
    #[serde(default)]
    pub vehicles: Vec<PlacedVehicle>,
    /// HDR equirect panorama (PFM).
    #[serde(default)]
    pub skydome_path: Option<String>,
    #[serde(default)]
    pub background: Option<BoxField>,
    #[serde(default = "default_epsilon")]
    pub exposure_epsilon: f64,
}

fn default_epsilon() -> f64 {
    ExposureStats::DEFAULT_EPSILON
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl SceneFile {
    /// Builds the session state; `base` anchors relative paths.
    pub fn into_state(self, base: &Path) -> Result<SceneState, SceneFileError> {
        if self.version != SCENE_VERSION {
            return Err(SceneFileError::Version(self.version));
        }
        let nodes = match self.lane_map {
            LaneMapSource::Nodes(n) => n,
            LaneMapSource::Path(p) => formats::decode_lane_nodes(&formats::read_file(&resolve(base, &p))?)?,
        };
        let skydome = match &self.skydome_path {
            Some(p) => Some(formats::decode_env_pfm(&formats::read_file(&resolve(base, p))?)?),
            None => None,
        };
        let state = SceneState {
            lane_map: LaneMap::new(nodes),
            rig: self.cameras,
            ego: self.ego,
            vehicles: self.vehicles,
            deleted_ids: Default::default(),
            skydome,
            background: self.background,
            exposure_epsilon: self.exposure_epsilon,
            view: Default::default(),
            history: Vec::new(),
        };
        let violations = validate_scene(&state);
        if violations.is_empty() {
            Ok(state)
        } else {
            Err(SceneFileError::Invalid(violations))
        }
    }
}

/// Loads `reference`: either [`DEMO_SCENE`] or a scene file path.
pub fn load_scene(reference: &str) -> Result<SceneState, SceneFileError> {
    if reference == DEMO_SCENE {
        return Ok(demo_scene());
    }
    let path = Path::new(reference);
    let file: SceneFile = serde_json::from_slice(&formats::read_file(path)?).map_err(FormatError::from)?;
    file.into_state(path.parent().unwrap_or(Path::new(".")))
}

/// Writes `state` as a scene file plus `lanes.json` and, when present,
/// `skydome.pfm` into `dir`. Returns the scene file path.
pub fn write_scene(state: &SceneState, dir: &Path) -> Result<PathBuf, SceneFileError> {
    formats::write_file(&dir.join("lanes.json"), &formats::encode_lane_nodes(&state.lane_map.nodes)?)?;
    let skydome_path = match &state.skydome {
        Some(sky) => {
            formats::write_file(&dir.join("skydome.pfm"), &formats::encode_env_pfm(sky))?;
            Some("skydome.pfm".to_string())
        }
        None => None,
    };
    let file = SceneFile {
        version: SCENE_VERSION.to_string(),
        lane_map: LaneMapSource::Path("lanes.json".into()),
        cameras: state.rig.clone(),
        ego: state.ego.clone(),
        vehicles: state.vehicles.clone(),
        skydome_path,
        background: state.background.clone(),
        exposure_epsilon: state.exposure_epsilon,
    };
    let path = dir.join("scene.json");
    formats::write_file(&path, &serde_json::to_vec_pretty(&file).map_err(FormatError::from)?)?;
    Ok(path)
}

/// Reads a JSON list of asset records and normalizes each one. Returns the
/// bank and one note per repaired record.
pub fn load_bank(path: &Path) -> Result<(AssetBank, Vec<String>), SceneFileError> {
    let records: Vec<AssetRecord> = serde_json::from_slice(&formats::read_file(path)?).map_err(FormatError::from)?;
    let mut notes = Vec::new();
    let mut out = Vec::with_capacity(records.len());
    for r in &records {
        let (fixed, repairs) =
            normalize_asset(r).map_err(|e| SceneFileError::Asset { id: r.id.clone(), message: e.to_string() })?;
        notes.extend(repairs.into_iter().map(|n| format!("{}: {n}", r.id)));
        out.push(fixed);
    }
    Ok((AssetBank::new(out), notes))
}

/// The bank at `path`, or the demo bank when no path is given.
pub fn bank_or_demo(path: Option<&Path>) -> Result<(AssetBank, Vec<String>), SceneFileError> {
    match path {
        Some(p) => load_bank(p),
        None => Ok((demo_bank(), Vec::new())),
    }
}
