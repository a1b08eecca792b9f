//! Renderer-bridge document: aligned cameras, asset placements, trajectories
//! and environment-map references for an external renderer.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assets::{AssetBank, Dimensions};
use crate::camera::{apply_view_delta, ViewDelta};
use crate::image::Rgb;
use crate::photometry::exposure_factor;
use crate::scene::{ImageSize, Intrinsics, PlacedVehicle, Pose2D, Pose6D, SceneState, Trajectory};

pub const EXPORT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportCamera {
    pub id: String,
    pub intrinsics: Intrinsics,
    pub image_size: ImageSize,
    /// Camera-to-ego pose with the session's view delta applied.
    pub extrinsic: Pose6D,
    pub exposure: f64,
    pub exposure_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportAsset {
    pub instance_id: String,
    pub asset_id: String,
    pub path: String,
    pub pose: Pose2D,
    #[serde(default)]
    pub color: Option<Rgb>,
    #[serde(default)]
    pub dimensions: Option<Dimensions>,
    /// Full vehicle attribute map, kept for lossless re-import.
    pub attributes: BTreeMap<String, Value>,
}

/// File references of one object's lighting probe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRef {
    pub instance_id: String,
    pub hdr: String,
    pub transmittance: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRefs {
    pub skydome: Option<String>,
    pub probes: Vec<ProbeRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub version: String,
    pub fps: f64,
    pub frame_count: usize,
    pub cameras: Vec<ExportCamera>,
    pub camera_delta: ViewDelta,
    pub assets: Vec<ExportAsset>,
    pub trajectories: BTreeMap<String, Trajectory>,
    pub deleted_ids: BTreeSet<String>,
    pub ego: Trajectory,
    pub environment: EnvironmentRefs,
}

pub fn probe_ref(instance_id: &str) -> ProbeRef {
    ProbeRef {
        instance_id: instance_id.to_string(),
        hdr: format!("probes/{instance_id}.pfm"),
        transmittance: format!("probes/{instance_id}_transmittance.csv"),
    }
}

/// Builds the bridge document. Added vehicles get probe references; scene
/// vehicles belong to the background and get none.
pub fn export_scene(state: &SceneState, bank: &AssetBank, skydome_ref: Option<&str>) -> ExportDocument {
    let stats = state.exposure_stats();
    let cameras = state
        .rig
        .cameras
        .iter()
        .map(|c| ExportCamera {
            id: c.id.clone(),
            intrinsics: c.intrinsics,
            image_size: c.image_size,
            extrinsic: apply_view_delta(&c.extrinsic, &state.view),
            exposure: c.exposure,
            exposure_factor: stats.map_or(1.0, |s| exposure_factor(c.exposure, &s)),
        })
        .collect();
    let assets: Vec<ExportAsset> = state
        .vehicles
        .iter()
        .map(|v| {
            let rec = bank.get(&v.asset_id);
            ExportAsset {
                instance_id: v.instance_id.clone(),
                asset_id: v.asset_id.clone(),
                path: rec.map_or_else(String::new, |r| r.mesh_path.clone()),
                pose: v.pose,
                color: v.color().or(rec.map(|r| r.color)),
                dimensions: rec.and_then(|r| r.dimensions),
                attributes: v.attributes.clone(),
            }
        })
        .collect();
    let trajectories = state
        .vehicles
        .iter()
        .filter_map(|v| v.trajectory.clone().map(|t| (v.instance_id.clone(), t)))
        .collect();
    let probes = state
        .vehicles
        .iter()
        .filter(|v| v.attributes.get("origin").and_then(Value::as_str) == Some("added"))
        .map(|v| probe_ref(&v.instance_id))
        .collect();
    let dt = state.ego.dt;
    ExportDocument {
        version: EXPORT_VERSION.to_string(),
        fps: if dt > 0.0 { 1.0 / dt } else { 0.0 },
        frame_count: state.ego.samples.len(),
        cameras,
        camera_delta: state.view,
        assets,
        trajectories,
        deleted_ids: state.deleted_ids.clone(),
        ego: state.ego.clone(),
        environment: EnvironmentRefs { skydome: skydome_ref.map(ToString::to_string), probes },
    }
}

/// Vehicles described by a bridge document, in document order.
pub fn import_vehicles(doc: &ExportDocument) -> Vec<PlacedVehicle> {
    doc.assets
        .iter()
        .map(|a| PlacedVehicle {
            instance_id: a.instance_id.clone(),
            asset_id: a.asset_id.clone(),
            pose: a.pose,
            trajectory: doc.trajectories.get(&a.instance_id).cloned(),
            attributes: a.attributes.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{demo_bank, demo_scene};

    #[test]
    fn reimport_is_exact() {
        let s = demo_scene();
        let doc = export_scene(&s, &demo_bank(), Some("sky.pfm"));
        assert_eq!(import_vehicles(&doc), s.vehicles);
        assert_eq!(doc.frame_count, 40);
        assert!((doc.fps - 10.0).abs() < 1e-9);
        assert!(doc.environment.probes.is_empty());
    }
}
