//! Domain types shared by every module and structural validation of a scene.
//!
//! Frame convention: x forward, y left, z up; headings are CCW from +x. All
//! quantities are SI (meters, seconds, radians); degrees appear only at the
//! command-language boundary.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::camera::ViewDelta;
use crate::image::Rgb;
use crate::math::{angle_diff, wrap_angle, Mat3, Vec2, Vec3, PI};
use crate::photometry::fields::BoxField;
use crate::skydome::EnvironmentMap;

/// Tolerance on `‖RᵀR − I‖` for a valid rotation.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("time {t} s is outside the recorded range [{start}, {end}] s")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("trajectory needs at least two samples")]
    EmptyTrajectory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneType {
    Centerline,
    Boundary,
    Other,
}

/// A directed lane segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneNode {
    pub start: Vec2,
    pub end: Vec2,
    #[serde(rename = "type")]
    pub lane_type: LaneType,
}

impl LaneNode {
    pub fn centerline(start: Vec2, end: Vec2) -> Self {
        LaneNode { start, end, lane_type: LaneType::Centerline }
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.start + self.end) * 0.5
    }

    pub fn direction(&self) -> Vec2 {
        (self.end - self.start).normalized()
    }

    pub fn heading(&self) -> f64 {
        (self.end - self.start).angle()
    }

    /// The same segment driven the other way.
    pub fn reversed(&self) -> LaneNode {
        LaneNode { start: self.end, end: self.start, lane_type: self.lane_type }
    }

    pub fn is_centerline(&self) -> bool {
        self.lane_type == LaneType::Centerline
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneMap {
    pub nodes: Vec<LaneNode>,
    #[serde(default = "default_frame")]
    pub frame: String,
}

fn default_frame() -> String {
    "ego".to_string()
}

impl LaneMap {
    pub fn new(nodes: Vec<LaneNode>) -> Self {
        LaneMap { nodes, frame: default_frame() }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn centerlines(&self) -> impl Iterator<Item = &LaneNode> {
        self.nodes.iter().filter(|n| n.is_centerline())
    }

    /// Every node swapped end-for-start.
    pub fn reversed(&self) -> LaneMap {
        LaneMap {
            nodes: self.nodes.iter().map(LaneNode::reversed).collect(),
            frame: self.frame.clone(),
        }
    }

    /// Distance from `p` to the nearest centerline midpoint, `None` for a map
    /// without centerlines.
    pub fn nearest_midpoint(&self, p: Vec2) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.is_centerline() {
                continue;
            }
            let d = n.midpoint().distance(p);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }
}

/// Rigid pose: a rotation followed by a translation (local → parent frame).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose6D {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Pose6D {
    fn default() -> Self {
        Pose6D::IDENTITY
    }
}

impl Pose6D {
    pub const IDENTITY: Pose6D = Pose6D { rotation: Mat3::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Pose6D { rotation, translation }
    }

    /// Planar pose with heading about +z.
    pub fn planar(x: f64, y: f64, heading: f64) -> Self {
        Pose6D::new(Mat3::rot_z(heading), Vec3::new(x, y, 0.0))
    }

    /// `self ∘ other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Pose6D) -> Pose6D {
        Pose6D::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Pose6D {
        let rt = self.rotation.transpose();
        Pose6D::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_dir(&self, d: Vec3) -> Vec3 {
        self.rotation * d
    }

    pub fn max_abs_diff(&self, o: &Pose6D) -> f64 {
        let t = self.translation - o.translation;
        self.rotation
            .max_abs_diff(&o.rotation)
            .max(t.x.abs())
            .max(t.y.abs())
            .max(t.z.abs())
    }

    /// Heading of the local +x axis projected on the ground plane.
    pub fn heading(&self) -> f64 {
        let fwd = self.rotation.col(0);
        fwd.y.atan2(fwd.x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

/// Pinhole camera. The extrinsic maps camera coordinates (x right, y down,
/// z along the optical axis) into the ego frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub id: String,
    pub intrinsics: Intrinsics,
    pub image_size: ImageSize,
    pub extrinsic: Pose6D,
    /// Exposure time in seconds.
    pub exposure: f64,
}

impl CameraModel {
    /// Camera-to-ego rotation for a camera looking along ego heading `yaw`
    /// (CCW from +x) with the image x axis to the right and y axis down.
    pub fn forward_rotation(yaw: f64) -> Mat3 {
        let base = Mat3::from_cols(-Vec3::Y, -Vec3::Z, Vec3::X);
        Mat3::rot_z(yaw) * base
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub cameras: Vec<CameraModel>,
    pub reference_camera: String,
}

impl CameraRig {
    pub fn camera(&self, id: &str) -> Option<&CameraModel> {
        self.cameras.iter().find(|c| c.id == id)
    }

    pub fn reference(&self) -> Option<&CameraModel> {
        self.camera(&self.reference_camera)
    }

    pub fn exposures(&self) -> Vec<f64> {
        self.cameras.iter().map(|c| c.exposure).collect()
    }
}

/// Statistics of exposure times across all images of a rig.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureStats {
    pub mean: f64,
    pub std: f64,
    pub epsilon: f64,
}

impl ExposureStats {
    pub const DEFAULT_EPSILON: f64 = 0.5;

    /// Mean and population standard deviation of `exposures`.
    pub fn from_exposures(exposures: &[f64], epsilon: f64) -> Option<Self> {
        if exposures.is_empty() {
            return None;
        }
        let n = exposures.len() as f64;
        let mean = exposures.iter().sum::<f64>() / n;
        let var = exposures.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        Some(ExposureStats { mean, std: var.sqrt(), epsilon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2D { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    /// Expresses a world point in this pose's local frame.
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotated(-self.heading)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl TrajectorySample {
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.heading)
    }
}

/// Uniformly timed planar poses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub dt: f64,
}

impl Trajectory {
    /// Stationary trajectory holding `pose` over `[0, (n−1)·dt]`.
    pub fn stationary(pose: Pose2D, n: usize, dt: f64) -> Self {
        let samples = (0..n.max(2))
            .map(|i| TrajectorySample { t: i as f64 * dt, x: pose.x, y: pose.y, heading: pose.heading })
            .collect();
        Trajectory { samples, dt }
    }

    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Linear position and shortest-arc heading interpolation at `t`.
    pub fn interpolate(&self, t: f64) -> Result<Pose2D, SceneError> {
        if self.samples.len() < 2 {
            return Err(SceneError::EmptyTrajectory);
        }
        let (start, end) = (self.start_time(), self.end_time());
        if !(t >= start && t <= end) {
            return Err(SceneError::OutOfRange { t, start, end });
        }
        let idx = self.samples.partition_point(|s| s.t <= t);
        if idx == 0 {
            return Ok(self.samples[0].pose());
        }
        let a = &self.samples[idx - 1];
        if a.t == t || idx == self.samples.len() {
            return Ok(a.pose());
        }
        let b = &self.samples[idx];
        let u = (t - a.t) / (b.t - a.t);
        Ok(Pose2D::new(
            a.x + (b.x - a.x) * u,
            a.y + (b.y - a.y) * u,
            wrap_angle(a.heading + angle_diff(a.heading, b.heading) * u),
        ))
    }

    /// Like [`Trajectory::interpolate`] but holds the end poses outside the range.
    pub fn pose_at_clamped(&self, t: f64) -> Option<Pose2D> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if t <= first.t {
            return Some(first.pose());
        }
        if t >= last.t {
            return Some(last.pose());
        }
        self.interpolate(t).ok()
    }

    pub fn path_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| Vec2::new(w[1].x - w[0].x, w[1].y - w[0].y).norm())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedVehicle {
    pub instance_id: String,
    pub asset_id: String,
    pub pose: Pose2D,
    #[serde(default)]
    pub trajectory: Option<Trajectory>,
    #[serde(default)]
    pub attributes: BTreeMap<String, Value>,
}

impl PlacedVehicle {
    pub fn color(&self) -> Option<Rgb> {
        self.attributes.get("color").and_then(|v| serde_json::from_value(v.clone()).ok())
    }

    pub fn vehicle_type(&self) -> Option<&str> {
        self.attributes.get("type").and_then(Value::as_str)
    }

    /// Pose at time `t`, holding the trajectory ends.
    pub fn pose_at(&self, t: f64) -> Pose2D {
        self.trajectory
            .as_ref()
            .and_then(|tr| tr.pose_at_clamped(t))
            .unwrap_or(self.pose)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditAction {
    Add,
    Delete,
    ViewChange,
    Revise,
    AbstractExpand,
}

/// One decomposed editing instruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditConfig {
    pub action: EditAction,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, Value>,
    pub round: u32,
}

impl EditConfig {
    pub fn new(action: EditAction, round: u32) -> Self {
        EditConfig { action, target: None, parameters: BTreeMap::new(), round }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn with_target(mut self, target: &str) -> Self {
        self.target = Some(target.to_string());
        self
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.parameters.get(key).and_then(Value::as_str)
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).and_then(Value::as_f64)
    }

    pub fn param_strings(&self, key: &str) -> Vec<String> {
        self.parameters
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|v| v.as_str().map(ToString::to_string)).collect())
            .unwrap_or_default()
    }
}

/// The session's single source of truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub lane_map: LaneMap,
    pub rig: CameraRig,
    /// Ego motion over the clip; a stationary ego still has two samples.
    pub ego: Trajectory,
    pub vehicles: Vec<PlacedVehicle>,
    pub deleted_ids: BTreeSet<String>,
    #[serde(default)]
    pub skydome: Option<EnvironmentMap>,
    /// Analytic radiance field standing in for the reconstructed background.
    #[serde(default)]
    pub background: Option<BoxField>,
    #[serde(default = "default_epsilon")]
    pub exposure_epsilon: f64,
    /// Accumulated viewpoint change applied on top of every extrinsic.
    #[serde(default)]
    pub view: ViewDelta,
    pub history: Vec<EditConfig>,
}

fn default_epsilon() -> f64 {
    ExposureStats::DEFAULT_EPSILON
}

impl SceneState {
    pub fn vehicle(&self, id: &str) -> Option<&PlacedVehicle> {
        self.vehicles.iter().find(|v| v.instance_id == id)
    }

    pub fn exposure_stats(&self) -> Option<ExposureStats> {
        ExposureStats::from_exposures(&self.rig.exposures(), self.exposure_epsilon)
    }
}

/// One broken invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation { field: field.into(), rule: rule.into() }
    }
}

fn check_pose(field: &str, pose: &Pose6D, out: &mut Vec<Violation>) {
    if !pose.rotation.is_finite() || !pose.translation.is_finite() {
        out.push(Violation::new(field, "pose must be finite"));
        return;
    }
    let err = pose.rotation.orthonormality_error();
    if err > ORTHONORMAL_TOL {
        out.push(Violation::new(
            format!("{field}.rotation"),
            format!("rotation not orthonormal: |R^T R - I| = {err:.3e} > 1e-9"),
        ));
    } else if pose.rotation.determinant() <= 0.0 {
        out.push(Violation::new(format!("{field}.rotation"), "rotation determinant must be +1"));
    }
}

fn check_trajectory(field: &str, tr: &Trajectory, out: &mut Vec<Violation>) {
    if tr.samples.len() < 2 {
        out.push(Violation::new(field, "trajectory needs at least 2 samples"));
        return;
    }
    if !(tr.dt > 0.0) {
        out.push(Violation::new(format!("{field}.dt"), "dt must be positive"));
        return;
    }
    for (i, w) in tr.samples.windows(2).enumerate() {
        let step = w[1].t - w[0].t;
        if !(step > 0.0) {
            out.push(Violation::new(format!("{field}.samples[{}]", i + 1), "timestamps must strictly increase"));
            return;
        }
        if (step - tr.dt).abs() > 1e-9 * tr.dt.max(1.0) {
            out.push(Violation::new(format!("{field}.samples[{}]", i + 1), "sample spacing must equal dt"));
            return;
        }
    }
}

/// Checks every structural invariant of `state`; empty iff all hold.
pub fn validate_scene(state: &SceneState) -> Vec<Violation> {
    let mut out = Vec::new();

    for (i, n) in state.lane_map.nodes.iter().enumerate() {
        let field = format!("lane_map.nodes[{i}]");
        if !n.start.is_finite() || !n.end.is_finite() {
            out.push(Violation::new(field, "coordinates must be finite"));
        } else if n.start == n.end {
            out.push(Violation::new(field, "start must differ from end"));
        }
    }

    let mut ids = BTreeSet::new();
    for (i, cam) in state.rig.cameras.iter().enumerate() {
        let field = format!("rig.cameras[{i}]");
        if !ids.insert(cam.id.as_str()) {
            out.push(Violation::new(format!("{field}.id"), format!("duplicate camera id '{}'", cam.id)));
        }
        if !(cam.exposure > 0.0) {
            out.push(Violation::new(format!("{field}.exposure"), "exposure must be positive"));
        }
        if !(cam.intrinsics.fx > 0.0 && cam.intrinsics.fy > 0.0) {
            out.push(Violation::new(format!("{field}.intrinsics"), "focal lengths must be positive"));
        }
        if cam.image_size.width == 0 || cam.image_size.height == 0 {
            out.push(Violation::new(format!("{field}.image_size"), "image size must be positive"));
        }
        check_pose(&format!("{field}.extrinsic"), &cam.extrinsic, &mut out);
    }
    if !ids.contains(state.rig.reference_camera.as_str()) {
        out.push(Violation::new(
            "rig.reference_camera",
            format!("reference camera '{}' not in rig", state.rig.reference_camera),
        ));
    }

    check_trajectory("ego", &state.ego, &mut out);

    let mut vehicle_ids = BTreeSet::new();
    for (i, v) in state.vehicles.iter().enumerate() {
        let field = format!("vehicles[{i}]");
        if !vehicle_ids.insert(v.instance_id.as_str()) {
            out.push(Violation::new(
                format!("{field}.instance_id"),
                format!("duplicate instance id '{}'", v.instance_id),
            ));
        }
        if !(v.pose.heading > -PI && v.pose.heading <= PI) {
            out.push(Violation::new(format!("{field}.pose.heading"), "heading must lie in (-pi, pi]"));
        }
        if !v.pose.x.is_finite() || !v.pose.y.is_finite() {
            out.push(Violation::new(format!("{field}.pose"), "position must be finite"));
        }
        if let Some(tr) = &v.trajectory {
            check_trajectory(&format!("{field}.trajectory"), tr, &mut out);
        }
        if state.deleted_ids.contains(&v.instance_id) {
            out.push(Violation::new(
                "deleted_ids",
                format!("vehicle '{}' is both placed and deleted", v.instance_id),
            ));
        }
    }

    if let Some(sky) = &state.skydome {
        if sky.pixels.len() != sky.width * sky.height {
            out.push(Violation::new("skydome", "pixel count does not match resolution"));
        } else if !sky.pixels.iter().all(|p| p.is_finite() && p.is_nonnegative()) {
            out.push(Violation::new("skydome", "pixels must be finite and nonnegative"));
        }
    }

    out
}

/// Ego pose at time `t`, interpolated from the ego trajectory.
pub fn ego_frame(state: &SceneState, t: f64) -> Result<Pose6D, SceneError> {
    let p = state.ego.interpolate(t)?;
    Ok(Pose6D::planar(p.x, p.y, p.heading))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    #[test]
    fn demo_scene_is_valid() {
        assert_eq!(validate_scene(&demo::demo_scene()), Vec::new());
    }

    #[test]
    fn placed_and_deleted_is_flagged() {
        let mut s = demo::demo_scene();
        let id = s.vehicles[0].instance_id.clone();
        s.deleted_ids.insert(id.clone());
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains(&id));
    }

    #[test]
    fn stretched_rotation_is_flagged() {
        let mut s = demo::demo_scene();
        let mut r = s.rig.cameras[0].extrinsic.rotation;
        for c in r.rows[0].iter_mut() {
            *c *= 1.1;
        }
        // oracle: |R^T R - I| computed directly
        let rt_r = r.transpose() * r;
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = rt_r.rows[i][j] - if i == j { 1.0 } else { 0.0 };
                acc += d * d;
            }
        }
        assert!(acc.sqrt() > ORTHONORMAL_TOL);
        s.rig.cameras[0].extrinsic.rotation = r;
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].rule.contains("orthonormal"));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut s = demo::demo_scene();
        s.rig.cameras[0].exposure = -1.0;
        let before = s.clone();
        let a = validate_scene(&s);
        let b = validate_scene(&s);
        assert_eq!(a, b);
        assert_eq!(s, before);
    }

    fn two_sample(h0: f64, h1: f64, x1: f64) -> SceneState {
        let mut s = demo::demo_scene();
        s.ego = Trajectory {
            samples: alloc::vec![
                TrajectorySample { t: 0.0, x: 0.0, y: 0.0, heading: h0 },
                TrajectorySample { t: 1.0, x: x1, y: 0.0, heading: h1 },
            ],
            dt: 1.0,
        };
        s
    }

    #[test]
    fn ego_frame_at_sample_time() {
        let s = two_sample(0.0, 0.0, 2.0);
        let p = ego_frame(&s, 1.0).unwrap();
        assert_eq!(p.translation, Vec3::new(2.0, 0.0, 0.0));
    }

    #[test]
    fn ego_frame_midpoint_translation() {
        let s = two_sample(0.0, 0.0, 2.0);
        let p = ego_frame(&s, 0.5).unwrap();
        assert_eq!(p.translation, Vec3::new(1.0, 0.0, 0.0));
        assert!(p.heading().abs() < 1e-15);
    }

    #[test]
    fn ego_frame_heading_shortest_arc() {
        let s = two_sample(10f64.to_radians(), 30f64.to_radians(), 0.0);
        let h = ego_frame(&s, 0.5).unwrap().heading();
        assert!((h - 20f64.to_radians()).abs() < 1e-12);
        // across the ±π seam: 170° → −170° passes through 180°
        let s = two_sample(170f64.to_radians(), -170f64.to_radians(), 0.0);
        let h = ego_frame(&s, 0.5).unwrap().heading();
        assert!((wrap_angle(h - PI)).abs() < 1e-12);
    }

    #[test]
    fn ego_frame_out_of_range() {
        let s = two_sample(0.0, 0.0, 2.0);
        assert!(matches!(ego_frame(&s, 1.5), Err(SceneError::OutOfRange { .. })));
        assert!(matches!(ego_frame(&s, -0.1), Err(SceneError::OutOfRange { .. })));
    }
}
