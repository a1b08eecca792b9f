//! View adjustment, multi-camera pose alignment, pixel rays and the
//! equirectangular convention shared by the lighting modules.
//!
//! Equirectangular convention: row 0 is the zenith (+z) and the last row the
//! nadir; row centers sit at polar angle `(row + 0.5)·π/h`. Column `c` is
//! centered on azimuth `2π·c/w`, measured CCW from +x.

use alloc::collections::BTreeMap;
use alloc::string::String;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Mat3, Vec3, PI, TAU};
use crate::scene::{CameraModel, Pose6D};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("front-camera anchor poses coincide; alignment scale is undefined")]
    DegenerateScale,
    #[error("alignment input lacks camera '{camera}' at trigger {trigger}")]
    MissingAnchor { camera: String, trigger: u32 },
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    PixelOutOfBounds { u: f64, v: f64, width: u32, height: u32 },
    #[error("equirect index ({row}, {col}) outside {h}x{w}")]
    EquirectOutOfRange { row: usize, col: usize, h: usize, w: usize },
}

/// Viewpoint change: translation in the ego frame plus yaw/pitch/roll.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViewDelta {
    pub translation: Vec3,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl ViewDelta {
    pub fn translate(x: f64, y: f64, z: f64) -> Self {
        ViewDelta { translation: Vec3::new(x, y, z), ..Default::default() }
    }

    pub fn rotation(&self) -> Mat3 {
        Mat3::from_ypr(self.yaw, self.pitch, self.roll)
    }

    pub fn as_pose(&self) -> Pose6D {
        Pose6D::new(self.rotation(), self.translation)
    }

    /// The single delta equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &ViewDelta) -> ViewDelta {
        let p = next.as_pose().compose(&self.as_pose());
        let (yaw, pitch, roll) = p.rotation.to_ypr();
        ViewDelta { translation: p.translation, yaw, pitch, roll }
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }
}

/// Returns `T_delta · extrinsic`.
pub fn apply_view_delta(extrinsic: &Pose6D, delta: &ViewDelta) -> Pose6D {
    delta.as_pose().compose(extrinsic)
}

/// Camera/trigger key for alignment tables.
pub type ShotKey = (String, u32);

/// Recalibrated poses in an external unified space plus the vehicle-space
/// front-camera anchors at triggers 0 and 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentInput {
    pub front_camera: String,
    pub recalibrated: BTreeMap<ShotKey, Pose6D>,
    pub vehicle_front_0: Pose6D,
    pub vehicle_front_1: Pose6D,
}

/// Output of [`align_cameras`].
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub scale: f64,
    pub poses: BTreeMap<ShotKey, Pose6D>,
}

/// Maps every recalibrated pose into vehicle space using the front camera's
/// poses at triggers 0 and 1 as anchors.
///
/// `R = R_v0 · R_m0⁻¹ · R_m` and `T = R_v0 · R_m0⁻¹ · (T_m − T_m0) / S + T_v0`
/// with `S = ‖T_m1 − T_m0‖ / ‖T_v1 − T_v0‖`.
pub fn align_cameras(input: &AlignmentInput) -> Result<Alignment, GeometryError> {
    let anchor = |k: u32| {
        input
            .recalibrated
            .get(&(input.front_camera.clone(), k))
            .ok_or(GeometryError::MissingAnchor { camera: input.front_camera.clone(), trigger: k })
    };
    let m0 = anchor(0)?;
    let m1 = anchor(1)?;

    let dm = (m1.translation - m0.translation).norm();
    let dv = (input.vehicle_front_1.translation - input.vehicle_front_0.translation).norm();
    if !(dm > 0.0 && dv > 0.0) {
        return Err(GeometryError::DegenerateScale);
    }
    let scale = dm / dv;

    let to_vehicle = input.vehicle_front_0.rotation * m0.rotation.transpose();
    let poses = input
        .recalibrated
        .iter()
        .map(|(key, pm)| {
            let rotation = to_vehicle * pm.rotation;
            let translation = (to_vehicle * (pm.translation - m0.translation)) / scale
                + input.vehicle_front_0.translation;
            (key.clone(), Pose6D::new(rotation, translation))
        })
        .collect();
    Ok(Alignment { scale, poses })
}

/// A ray with unit direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Ray { origin, direction: direction.normalized() }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Back-projects pixel `(u, v)` through a pinhole camera whose pose is
/// `world_from_camera`.
pub fn pixel_ray_with_pose(
    camera: &CameraModel,
    world_from_camera: &Pose6D,
    u: f64,
    v: f64,
) -> Result<Ray, GeometryError> {
    let (w, h) = (camera.image_size.width, camera.image_size.height);
    if !(u >= 0.0 && v >= 0.0 && u <= w as f64 && v <= h as f64) {
        return Err(GeometryError::PixelOutOfBounds { u, v, width: w, height: h });
    }
    let k = &camera.intrinsics;
    let local = Vec3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    let dir = world_from_camera.rotation * local;
    Ok(Ray::new(world_from_camera.translation, dir))
}

/// Ray through pixel `(u, v)` in the frame the extrinsic maps into.
pub fn pixel_ray(camera: &CameraModel, u: f64, v: f64) -> Result<Ray, GeometryError> {
    pixel_ray_with_pose(camera, &camera.extrinsic, u, v)
}

/// Projects a world point into pixel coordinates; `None` behind the camera.
pub fn project(camera: &CameraModel, world_from_camera: &Pose6D, p: Vec3) -> Option<(f64, f64)> {
    let local = world_from_camera.inverse().transform_point(p);
    if local.z <= 1e-9 {
        return None;
    }
    let k = &camera.intrinsics;
    Some((k.fx * local.x / local.z + k.cx, k.fy * local.y / local.z + k.cy))
}

/// Unit direction of the center of equirect pixel `(row, col)`.
pub fn equirect_dir(row: usize, col: usize, h: usize, w: usize) -> Result<Vec3, GeometryError> {
    if row >= h || col >= w {
        return Err(GeometryError::EquirectOutOfRange { row, col, h, w });
    }
    Ok(equirect_dir_unchecked(row, col, h, w))
}

pub(crate) fn equirect_dir_unchecked(row: usize, col: usize, h: usize, w: usize) -> Vec3 {
    let theta = (row as f64 + 0.5) * PI / h as f64;
    let phi = col as f64 * TAU / w as f64;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

/// Continuous (polar, azimuth) coordinates of `dir` in pixel units:
/// `(row + 0.5, col)` at pixel centers.
pub fn equirect_coords(dir: Vec3, h: usize, w: usize) -> (f64, f64) {
    let d = dir.normalized();
    let theta = d.z.clamp(-1.0, 1.0).acos();
    let mut phi = d.y.atan2(d.x);
    if phi < 0.0 {
        phi += TAU;
    }
    (theta / PI * h as f64, phi / TAU * w as f64)
}

/// Pixel containing `dir`.
pub fn equirect_pixel(dir: Vec3, h: usize, w: usize) -> (usize, usize) {
    let (r, c) = equirect_coords(dir, h, w);
    let row = (r.floor() as isize).clamp(0, h as isize - 1) as usize;
    let col = ((c + 0.5).floor() as isize).rem_euclid(w as isize) as usize;
    (row, col)
}

/// Solid angle of one pixel in row `row`: `(2π/w)(cos θ₀ − cos θ₁)` over the
/// row's polar band.
pub fn equirect_solid_angle(row: usize, h: usize, w: usize) -> f64 {
    let band = PI / h as f64;
    let (t0, t1) = (row as f64 * band, (row + 1) as f64 * band);
    (TAU / w as f64) * (t0.cos() - t1.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ImageSize, Intrinsics};

    fn cam() -> CameraModel {
        CameraModel {
            id: "front".into(),
            intrinsics: Intrinsics { fx: 100.0, fy: 100.0, cx: 64.0, cy: 48.0 },
            image_size: ImageSize { width: 128, height: 96 },
            extrinsic: Pose6D::new(CameraModel::forward_rotation(0.3), Vec3::new(1.0, 0.0, 1.5)),
            exposure: 0.01,
        }
    }

    #[test]
    fn zero_delta_is_identity() {
        let e = cam().extrinsic;
        assert_eq!(apply_view_delta(&e, &ViewDelta::default()), e);
    }

    #[test]
    fn ahead_and_above() {
        let e = cam().extrinsic;
        let out = apply_view_delta(&e, &ViewDelta::translate(5.0, 0.0, 0.5));
        assert_eq!(out.translation - e.translation, Vec3::new(5.0, 0.0, 0.5));
        assert_eq!(out.rotation, e.rotation);
    }

    #[test]
    fn principal_point_is_optical_axis() {
        let c = cam();
        let r = pixel_ray(&c, 64.0, 48.0).unwrap();
        let axis = c.extrinsic.rotation.col(2);
        assert!((r.direction - axis).norm() < 1e-15);
        assert_eq!(r.origin, c.extrinsic.translation);
    }

    #[test]
    fn one_focal_length_off_axis_is_45_degrees() {
        let mut c = cam();
        c.intrinsics.fx = 60.0;
        let r = pixel_ray(&c, 64.0 + 60.0, 48.0).unwrap();
        let axis = c.extrinsic.rotation.col(2);
        let ang = r.direction.dot(axis).acos();
        assert!((ang - 1f64.atan()).abs() < 1e-12);
        // deflection stays in the image-x plane
        assert!(r.direction.dot(c.extrinsic.rotation.col(1)).abs() < 1e-15);
    }

    #[test]
    fn out_of_bounds_pixel() {
        assert!(pixel_ray(&cam(), -1.0, 0.0).is_err());
        assert!(pixel_ray(&cam(), 0.0, 97.0).is_err());
    }

    #[test]
    fn equirect_conventions() {
        let (h, w) = (64, 128);
        let top = equirect_dir(0, 0, h, w).unwrap();
        assert!(top.angle_to(Vec3::Z) <= PI / h as f64);
        let eq = equirect_dir(h / 2, 0, h, w).unwrap();
        assert!(eq.angle_to(Vec3::X) <= 0.5 * PI / h as f64 + 1e-12);
        assert!(equirect_dir(h, 0, h, w).is_err());
        assert!(equirect_dir(0, w, h, w).is_err());
    }

    #[test]
    fn equirect_round_trip_all_resolutions() {
        for (h, w) in [(32, 64), (64, 128), (128, 256)] {
            for r in 0..h {
                for c in 0..w {
                    let d = equirect_dir(r, c, h, w).unwrap();
                    assert!((d.norm() - 1.0).abs() < 1e-12);
                    assert_eq!(equirect_pixel(d, h, w), (r, c), "{h}x{w}");
                }
            }
        }
    }

    #[test]
    fn solid_angles_cover_sphere() {
        let (h, w) = (64, 128);
        let total: f64 = (0..h).map(|r| equirect_solid_angle(r, h, w) * w as f64).sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
    }
}
