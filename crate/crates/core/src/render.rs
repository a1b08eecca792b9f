//! Verification renderer: background from the analytic field and sky,
//! Lambertian box vehicles lit by blended environment probes, depth-tested
//! composition and sRGB encoding.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use thiserror::Error;

use crate::assets::AssetBank;
use crate::camera::{apply_view_delta, pixel_ray_with_pose, project, GeometryError, Ray};
use crate::compositor::{composite, motion_blur, BackgroundDepth, CompositeError, ForegroundLayer, SparseDepth};
use crate::demo::SUN_DIRECTION;
use crate::image::{Plane, Rgb, RgbImage};
use crate::lighting::{blend_environment, capture_surround, shade_lambertian, LightingError};
use crate::math::{Vec2, Vec3};
use crate::photometry::fields::{Aabb, BoxField, HomogeneousBox};
use crate::photometry::{exposure_factor, oetf_unchecked, render_ray_scaled, RaySampling};
use crate::scene::{CameraModel, ExposureStats, PlacedVehicle, Pose6D, SceneError, SceneState};
use crate::skydome::EnvironmentMap;

pub const SHADOW_FACTOR: f64 = 0.55;
const VEHICLE_DENSITY: f64 = 20.0;
const SCENE_VEHICLE_GAIN: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("unknown camera '{0}'")]
    UnknownCamera(String),
    #[error("rig has no exposure statistics")]
    NoExposure,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lighting(#[from] LightingError),
    #[error(transparent)]
    Composite(#[from] CompositeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    /// Camera to render; the rig's reference camera when `None`.
    pub camera: Option<String>,
    /// Resolution multiplier applied to the camera's image size.
    pub scale: f64,
    /// Environment probe resolution `(height, width)`.
    pub probe: (usize, usize),
    /// Directional motion blur along screen velocity; off by default.
    pub motion_blur: bool,
    pub blur_taps: usize,
    /// Sparse depth is sampled every `depth_stride` pixels.
    pub depth_stride: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { camera: None, scale: 1.0, probe: (8, 16), motion_blur: false, blur_taps: 5, depth_stride: 2 }
    }
}

/// All passes of one rendered frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLayers {
    /// Exposure-scaled HDR background.
    pub background: RgbImage,
    pub foreground: ForegroundLayer,
    pub depth: BackgroundDepth,
    /// Display-referred output.
    pub ldr: RgbImage,
}

/// A vehicle body as an oriented box resting on the ground.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleBox {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
    pub height: f64,
    pub albedo: Rgb,
}

impl VehicleBox {
    pub fn of(v: &PlacedVehicle, bank: &AssetBank, t: f64) -> VehicleBox {
        let asset = bank.get(&v.asset_id);
        let dims = asset.and_then(|a| a.dimensions);
        let pose = v.pose_at(t);
        VehicleBox {
            center: pose.position(),
            heading: pose.heading,
            half_length: dims.map_or(2.25, |d| d.length / 2.0),
            half_width: dims.map_or(0.9, |d| d.width / 2.0),
            height: dims.map_or(1.5, |d| d.height),
            albedo: v.color().or(asset.map(|a| a.color)).unwrap_or(Rgb::gray(0.5)),
        }
    }

    fn local(&self, p: Vec3) -> Vec3 {
        let d = Vec2::new(p.x, p.y) - self.center;
        let q = d.rotated(-self.heading);
        Vec3::new(q.x, q.y, p.z)
    }

    fn local_aabb(&self) -> Aabb {
        Aabb::new(
            Vec3::new(-self.half_length, -self.half_width, 0.0),
            Vec3::new(self.half_length, self.half_width, self.height),
        )
    }

    /// World-axis box enclosing the body.
    pub fn world_aabb(&self) -> Aabb {
        let (s, c) = self.heading.sin_cos();
        let ex = (self.half_length * c).abs() + (self.half_width * s).abs();
        let ey = (self.half_length * s).abs() + (self.half_width * c).abs();
        Aabb::new(
            Vec3::new(self.center.x - ex, self.center.y - ey, 0.0),
            Vec3::new(self.center.x + ex, self.center.y + ey, self.height),
        )
    }

    /// Entry distance and outward world normal of the face hit by `ray`.
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, Vec3)> {
        let o = self.local(ray.origin);
        let d2 = Vec2::new(ray.direction.x, ray.direction.y).rotated(-self.heading);
        let local = Ray { origin: o, direction: Vec3::new(d2.x, d2.y, ray.direction.z) };
        let (t0, _) = self.local_aabb().intersect(&local)?;
        if t0 <= 0.0 {
            return None;
        }
        let p = local.at(t0);
        let b = self.local_aabb();
        let faces = [
            ((p.x - b.max.x).abs(), Vec3::X),
            ((p.x - b.min.x).abs(), -Vec3::X),
            ((p.y - b.max.y).abs(), Vec3::Y),
            ((p.y - b.min.y).abs(), -Vec3::Y),
            ((p.z - b.max.z).abs(), Vec3::Z),
        ];
        let n = faces.iter().fold((f64::INFINITY, Vec3::Z), |acc, f| if f.0 < acc.0 { *f } else { acc }).1;
        let nw = Vec2::new(n.x, n.y).rotated(self.heading);
        Some((t0, Vec3::new(nw.x, nw.y, n.z)))
    }

    /// Whether ground point `p` lies in the body's shadow for a sun at `sun`.
    pub fn shadows(&self, p: Vec3, sun: Vec3) -> bool {
        if sun.z <= 0.0 {
            return false;
        }
        let shift = Vec2::new(sun.x, sun.y) * (-0.5 * self.height / sun.z);
        let q = self.local(Vec3::new(p.x - shift.x, p.y - shift.y, 0.0));
        q.x.abs() <= self.half_length && q.y.abs() <= self.half_width
    }
}

fn is_scene_vehicle(v: &PlacedVehicle) -> bool {
    v.attributes.get("origin").and_then(|o| o.as_str()) == Some("scene")
}

/// Background field at time `t`: the static field plus the live vehicles
/// captured in the source footage. Deleted vehicles are absent, which stands
/// in for inpainting.
pub fn background_field(state: &SceneState, bank: &AssetBank, t: f64) -> BoxField {
    let mut field = state.background.clone().unwrap_or_default();
    for v in state.vehicles.iter().filter(|v| is_scene_vehicle(v) && !state.deleted_ids.contains(&v.instance_id)) {
        let b = VehicleBox::of(v, bank, t);
        field.boxes.push(HomogeneousBox {
            bounds: b.world_aabb(),
            density: VEHICLE_DENSITY,
            radiance: b.albedo * SCENE_VEHICLE_GAIN,
        });
    }
    field
}

/// Vehicles rendered in the foreground: added, not deleted.
pub fn foreground_vehicles(state: &SceneState) -> impl Iterator<Item = &PlacedVehicle> {
    state.vehicles.iter().filter(|v| !is_scene_vehicle(v) && !state.deleted_ids.contains(&v.instance_id))
}

/// Camera with its intrinsics and image size multiplied by `scale`.
pub fn scaled_camera(cam: &CameraModel, scale: f64) -> CameraModel {
    let mut c = cam.clone();
    if scale != 1.0 {
        c.intrinsics.fx *= scale;
        c.intrinsics.fy *= scale;
        c.intrinsics.cx *= scale;
        c.intrinsics.cy *= scale;
        c.image_size.width = ((cam.image_size.width as f64 * scale).round() as u32).max(1);
        c.image_size.height = ((cam.image_size.height as f64 * scale).round() as u32).max(1);
    }
    c
}

/// World pose of `cam` at time `t`: ego pose, then the view delta, then the
/// extrinsic.
pub fn camera_pose(state: &SceneState, cam: &CameraModel, t: f64) -> Result<Pose6D, RenderError> {
    let ego = crate::scene::ego_frame(state, t)?;
    Ok(ego.compose(&apply_view_delta(&cam.extrinsic, &state.view)))
}

/// Timestamps of the frames in the clip.
pub fn frame_times(state: &SceneState) -> Vec<f64> {
    state.ego.samples.iter().map(|s| s.t).collect()
}

fn sky_radiance(sky: Option<&EnvironmentMap>, dir: Vec3) -> Rgb {
    sky.map_or(Rgb::BLACK, |s| s.sample(dir))
}

/// Renders every pass of the frame at time `t`.
pub fn render_frame(state: &SceneState, bank: &AssetBank, t: f64, opts: &RenderOptions) -> Result<FrameLayers, RenderError> {
    let cam_id = opts.camera.clone().unwrap_or_else(|| state.rig.reference_camera.clone());
    let base = state.rig.camera(&cam_id).ok_or_else(|| RenderError::UnknownCamera(cam_id.clone()))?;
    let cam = scaled_camera(base, opts.scale);
    let stats = state.exposure_stats().ok_or(RenderError::NoExposure)?;
    let factor = exposure_factor(cam.exposure, &stats);
    let pose = camera_pose(state, &cam, t)?;
    let field = background_field(state, bank, t);
    let sky = state.skydome.as_ref();
    let sampling = RaySampling::Piecewise(1);
    let (w, h) = (cam.image_size.width as usize, cam.image_size.height as usize);

    let vehicles: Vec<(VehicleBox, &PlacedVehicle)> =
        foreground_vehicles(state).map(|v| (VehicleBox::of(v, bank, t), v)).collect();
    let sun = SUN_DIRECTION.normalized();

    let mut background = Plane::filled(w, h, Rgb::BLACK);
    let mut masks = Plane::filled(w, h, 0u16);
    let mut sparse = Vec::new();
    let mut shadow = Plane::filled(w, h, 1.0);
    let mut rays = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let ray = pixel_ray_with_pose(&cam, &pose, x as f64 + 0.5, y as f64 + 0.5)?;
            let out = render_ray_scaled(&ray, &field, &sampling, 1.0);
            let radiance = out.radiance + sky_radiance(sky, ray.direction) * out.transmittance;
            background.set(x, y, radiance * factor);
            if let Some((i, depth)) = field.first_hit(&ray) {
                let hit = ray.at(depth);
                masks.set(x, y, patch_label(i, hit));
                if x % opts.depth_stride.max(1) == 0 && y % opts.depth_stride.max(1) == 0 {
                    sparse.push(SparseDepth { u: x as u32, v: y as u32, depth });
                }
                if hit.z.abs() < 1e-6 && vehicles.iter().any(|(b, _)| b.shadows(hit, sun)) {
                    shadow.set(x, y, SHADOW_FACTOR);
                }
            }
            rays.push(ray);
        }
    }

    let mut layers = Vec::with_capacity(vehicles.len());
    for (b, v) in &vehicles {
        let probe = capture_surround(Vec3::new(b.center.x, b.center.y, 1.0), &field, &sampling, opts.probe.0, opts.probe.1)?;
        let env = match sky {
            Some(s) => blend_environment(&probe, s)?,
            None => probe.surround.clone(),
        };
        let normals = [Vec3::X, -Vec3::X, Vec3::Y, -Vec3::Y, Vec3::Z];
        let shades: Vec<(Vec3, Rgb)> = normals
            .iter()
            .map(|n| {
                let nw = Vec2::new(n.x, n.y).rotated(b.heading);
                let nw = Vec3::new(nw.x, nw.y, n.z);
                (nw, shade_lambertian(nw, b.albedo, &env))
            })
            .collect();
        let mut layer = ForegroundLayer::empty(w, h);
        for (i, ray) in rays.iter().enumerate() {
            if let Some((depth, n)) = b.intersect(ray) {
                let c = shades.iter().fold((f64::NEG_INFINITY, Rgb::BLACK), |acc, (sn, c)| {
                    let d = sn.dot(n);
                    if d > acc.0 { (d, *c) } else { acc }
                });
                layer.rgb.data[i] = c.1 * factor;
                layer.alpha.data[i] = 1.0;
                layer.depth.data[i] = depth;
            }
        }
        if opts.motion_blur {
            let velocity = screen_velocity(&cam, state, v, &pose, t);
            layer = motion_blur(&layer, velocity, opts.blur_taps);
        }
        layers.push(layer);
    }

    let mut foreground = merge_layers(&layers, w, h);
    foreground.shadow = shadow;
    let depth = BackgroundDepth { sparse, masks };
    let composed = composite(&foreground, &background, &depth)?;
    let ldr = Plane { data: composed.data.iter().map(|p| p.map(oetf_unchecked)).collect(), ..composed };
    Ok(FrameLayers { background, foreground, depth, ldr })
}

/// Segment label of a background hit: one label per building, ground split
/// into 4 m cells so nearby and distant road surface get separate depths.
fn patch_label(box_index: usize, hit: Vec3) -> u16 {
    if box_index > 0 {
        return box_index as u16;
    }
    let cx = ((hit.x / 4.0).floor() as i64).rem_euclid(128) as u16;
    let cy = ((hit.y / 4.0).floor() as i64).rem_euclid(64) as u16;
    1024 + cy * 128 + cx
}

/// Half the per-frame screen displacement of the vehicle center.
fn screen_velocity(cam: &CameraModel, state: &SceneState, v: &PlacedVehicle, pose: &Pose6D, t: f64) -> Vec2 {
    let dt = state.ego.dt;
    let a = v.pose_at(t);
    let b = v.pose_at(t + dt);
    let pa = project(cam, pose, Vec3::new(a.x, a.y, 0.7));
    let pb = project(cam, pose, Vec3::new(b.x, b.y, 0.7));
    match (pa, pb) {
        (Some(pa), Some(pb)) => Vec2::new(pb.0 - pa.0, pb.1 - pa.1) * 0.5,
        _ => Vec2::new(0.0, 0.0),
    }
}

/// Per pixel, the nearest covered layer wins.
fn merge_layers(layers: &[ForegroundLayer], w: usize, h: usize) -> ForegroundLayer {
    let mut out = ForegroundLayer::empty(w, h);
    for l in layers {
        for i in 0..out.alpha.data.len() {
            if l.alpha.data[i] > 0.0 && (out.alpha.data[i] == 0.0 || l.depth.data[i] < out.depth.data[i]) {
                out.rgb.data[i] = l.rgb.data[i];
                out.alpha.data[i] = l.alpha.data[i];
                out.depth.data[i] = l.depth.data[i];
            }
        }
    }
    out
}

/// Produces the display frames of a scene.
pub trait FrameRenderer {
    fn render(&self, state: &SceneState, bank: &AssetBank) -> Result<Vec<RgbImage>, RenderError>;
}

/// Renders frames one after another.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SceneRenderer {
    pub options: RenderOptions,
    /// Render only every `stride`-th frame when above 1.
    pub stride: usize,
}

impl FrameRenderer for SceneRenderer {
    fn render(&self, state: &SceneState, bank: &AssetBank) -> Result<Vec<RgbImage>, RenderError> {
        frame_times(state)
            .into_iter()
            .step_by(self.stride.max(1))
            .map(|t| render_frame(state, bank, t, &self.options).map(|f| f.ldr))
            .collect()
    }
}

/// Skips rendering; rounds then produce no frames.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoRender;

impl FrameRenderer for NoRender {
    fn render(&self, _: &SceneState, _: &AssetBank) -> Result<Vec<RgbImage>, RenderError> {
        Ok(Vec::new())
    }
}

/// Exposure statistics used for a scene's rig.
pub fn rig_stats(state: &SceneState) -> Result<ExposureStats, RenderError> {
    state.exposure_stats().ok_or(RenderError::NoExposure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::{demo_bank, demo_scene};

    #[test]
    fn demo_frame_renders() {
        let s = demo_scene();
        let opts = RenderOptions { scale: 0.5, ..Default::default() };
        let f = render_frame(&s, &demo_bank(), 0.0, &opts).unwrap();
        assert_eq!(f.ldr.size(), (48, 32));
        assert!(f.ldr.data.iter().all(|p| p.is_finite() && p.max_channel() <= 1.0 && p.is_nonnegative()));
    }

    #[test]
    fn box_hit_normal_faces_camera() {
        let b = VehicleBox { center: Vec2::new(10.0, 0.0), heading: 0.0, half_length: 2.0, half_width: 1.0, height: 1.5, albedo: Rgb::gray(0.5) };
        let (t, n) = b.intersect(&Ray::new(Vec3::new(0.0, 0.0, 0.5), Vec3::X)).unwrap();
        assert!((t - 8.0).abs() < 1e-12);
        assert_eq!(n, -Vec3::X);
    }
}
