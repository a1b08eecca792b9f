//! Parallel frame rendering and the artifacts written after a run: frame
//! sequence with manifest, renderer-bridge export, trajectory CSVs and
//! lighting probe dumps.

use std::path::Path;

use drivesim_core::assets::AssetBank;
use drivesim_core::compositor::{assemble_video, frame_name, VideoManifest};
use drivesim_core::demo::FPS;
use drivesim_core::export::{export_scene, probe_ref, ExportDocument};
use drivesim_core::image::RgbImage;
use drivesim_core::lighting::{capture_surround, LightingProbe};
use drivesim_core::math::Vec3;
use drivesim_core::photometry::RaySampling;
use drivesim_core::render::{background_field, foreground_vehicles, frame_times, render_frame, FrameRenderer, RenderError, RenderOptions};
use drivesim_core::scene::SceneState;
use rayon::prelude::*;

use crate::formats::{self, FormatError};

pub const SKYDOME_FILE: &str = "skydome.pfm";
/// Probe resolution `(height, width)` of exported lighting dumps.
pub const PROBE_SIZE: (usize, usize) = (16, 32);
/// Probes sit at roughly half the body height.
pub const PROBE_HEIGHT: f64 = 0.8;

/// Renders a clip's frames across the rayon pool.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParallelRenderer {
    pub options: RenderOptions,
    /// Render only every `stride`-th frame when above 1.
    pub stride: usize,
}

impl FrameRenderer for ParallelRenderer {
    fn render(&self, state: &SceneState, bank: &AssetBank) -> Result<Vec<RgbImage>, RenderError> {
        let times: Vec<f64> = frame_times(state).into_iter().step_by(self.stride.max(1)).collect();
        times.par_iter().map(|&t| render_frame(state, bank, t, &self.options).map(|f| f.ldr)).collect()
    }
}

/// Effective frame rate after striding.
pub fn frame_rate(state: &SceneState, stride: usize) -> f64 {
    let dt = state.ego.dt;
    let base = if dt > 0.0 { 1.0 / dt } else { FPS };
    base / stride.max(1) as f64
}

/// Writes `frames/frame_NNNN.png` and `manifest.json` under `dir`.
pub fn write_frames(dir: &Path, frames: &[RgbImage], fps: f64) -> anyhow::Result<VideoManifest> {
    let mut manifest = assemble_video(frames, fps)?;
    let encoded: Vec<Vec<u8>> = frames.par_iter().map(formats::encode_png).collect::<Result<_, _>>()?;
    for (i, png) in encoded.iter().enumerate() {
        formats::write_file(&dir.join("frames").join(frame_name(i)), png)?;
    }
    manifest.frames = manifest.frames.iter().map(|f| format!("frames/{f}")).collect();
    formats::write_file(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Lighting probe of an added vehicle at its first pose, with exposure-free
/// background radiance.
pub fn vehicle_probe(state: &SceneState, bank: &AssetBank, instance_id: &str) -> Option<LightingProbe> {
    let v = state.vehicle(instance_id)?;
    let t = state.ego.start_time();
    let field = background_field(state, bank, t);
    let p = v.pose_at(t);
    capture_surround(Vec3::new(p.x, p.y, PROBE_HEIGHT), &field, &RaySampling::Piecewise(1), PROBE_SIZE.0, PROBE_SIZE.1).ok()
}

/// Writes `export.json`, one trajectory CSV per vehicle, the skydome and
/// probe dumps under `dir`. Paths inside the document are relative to `dir`.
pub fn write_export(dir: &Path, state: &SceneState, bank: &AssetBank) -> anyhow::Result<ExportDocument> {
    let sky = state.skydome.as_ref().map(|_| SKYDOME_FILE);
    let doc = export_scene(state, bank, sky);
    if let Some(map) = &state.skydome {
        formats::write_file(&dir.join(SKYDOME_FILE), &formats::encode_env_pfm(map))?;
    }
    for (id, t) in &doc.trajectories {
        formats::write_file(&dir.join("trajectories").join(format!("{id}.csv")), &formats::encode_trajectory(t)?)?;
    }
    let ids: Vec<String> = foreground_vehicles(state).map(|v| v.instance_id.clone()).collect();
    let probes: Vec<(String, LightingProbe)> =
        ids.par_iter().filter_map(|id| vehicle_probe(state, bank, id).map(|p| (id.clone(), p))).collect();
    for (id, probe) in probes {
        let r = probe_ref(&id);
        formats::write_file(&dir.join(&r.hdr), &formats::encode_env_pfm(&probe.surround))?;
        formats::write_file(&dir.join(&r.transmittance), &formats::encode_transmittance(&probe)?)?;
    }
    formats::write_file(&dir.join("export.json"), &serde_json::to_vec_pretty(&doc).map_err(FormatError::from)?)?;
    Ok(doc)
}
