//! A small built-in scene: a four-lane road with a crossing, a three-camera
//! rig, box buildings, an analytic sky and a five-asset bank.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::vec::Vec;

use num_traits::Float;
use serde_json::json;

use crate::assets::{color_by_name, AssetBank, AssetRecord, Dimensions, PAINT_MATERIAL};
use crate::camera::{equirect_dir_unchecked, ViewDelta};
use crate::image::Rgb;
use crate::math::{Vec2, Vec3, PI};
use crate::photometry::fields::{Aabb, BoxField, HomogeneousBox};
use crate::scene::{
    CameraModel, CameraRig, ExposureStats, ImageSize, Intrinsics, LaneMap, LaneNode, PlacedVehicle, Pose2D, Pose6D,
    SceneState, Trajectory,
};
use crate::skydome::EnvironmentMap;

pub const NODE_LENGTH: f64 = 2.0;
pub const LANE_OFFSETS: [f64; 2] = [1.75, 5.25];
pub const CROSSING_X: f64 = 50.0;
pub const MAIN_ROAD: (f64, f64) = (-40.0, 120.0);
pub const CROSS_ROAD: (f64, f64) = (-40.0, 60.0);
pub const FRAMES: usize = 40;
pub const FPS: f64 = 10.0;
pub const SUN_DIRECTION: Vec3 = Vec3 { x: 0.5, y: 0.3, z: 0.812_403_840_463_596 };

/// Nodes of one straight lane from `a` to `b`, cut every [`NODE_LENGTH`]
/// starting `phase` meters in.
fn lane(a: Vec2, b: Vec2, phase: f64) -> Vec<LaneNode> {
    let len = a.distance(b);
    let dir = (b - a) * (1.0 / len);
    let mut out = Vec::new();
    let mut s = phase;
    while s + NODE_LENGTH <= len + 1e-9 {
        out.push(LaneNode::centerline(a + dir * s, a + dir * (s + NODE_LENGTH)));
        s += NODE_LENGTH;
    }
    out
}

/// Main road along x with two lanes each way (away lanes at negative y),
/// crossed at x = 50 by a second four-lane road. Adjacent lanes are staggered
/// by half a node.
pub fn demo_lane_map() -> LaneMap {
    let (x0, x1) = MAIN_ROAD;
    let (y0, y1) = CROSS_ROAD;
    let mut nodes = Vec::new();
    for (k, off) in LANE_OFFSETS.iter().enumerate() {
        let stagger = if k == 0 { 0.0 } else { 1.0 };
        nodes.extend(lane(Vec2::new(x0, -off), Vec2::new(x1, -off), stagger));
        nodes.extend(lane(Vec2::new(x1, *off), Vec2::new(x0, *off), 1.0 - stagger));
        nodes.extend(lane(Vec2::new(CROSSING_X - off, y1), Vec2::new(CROSSING_X - off, y0), stagger));
        nodes.extend(lane(Vec2::new(CROSSING_X + off, y0), Vec2::new(CROSSING_X + off, y1), 1.0 - stagger));
    }
    LaneMap::new(nodes)
}

fn camera(id: &str, yaw_deg: f64, offset: Vec3, exposure: f64) -> CameraModel {
    CameraModel {
        id: id.to_string(),
        intrinsics: Intrinsics { fx: 48.0, fy: 48.0, cx: 48.0, cy: 32.0 },
        image_size: ImageSize { width: 96, height: 64 },
        extrinsic: Pose6D::new(CameraModel::forward_rotation(yaw_deg.to_radians()), offset),
        exposure,
    }
}

/// Front camera plus two side-front cameras with 35° overlap each.
pub fn demo_rig() -> CameraRig {
    CameraRig {
        cameras: alloc::vec![
            camera("front", 0.0, Vec3::new(1.5, 0.0, 1.6), 0.010),
            camera("front_left", 55.0, Vec3::new(1.3, 0.5, 1.6), 0.020),
            camera("front_right", -55.0, Vec3::new(1.3, -0.5, 1.6), 0.015),
        ],
        reference_camera: "front".to_string(),
    }
}

fn slab(min: [f64; 3], max: [f64; 3], radiance: Rgb) -> HomogeneousBox {
    HomogeneousBox {
        bounds: Aabb::new(Vec3::new(min[0], min[1], min[2]), Vec3::new(max[0], max[1], max[2])),
        density: 20.0,
        radiance,
    }
}

/// Ground slab and building blocks along both roads.
pub fn demo_background() -> BoxField {
    let mut boxes = alloc::vec![slab([-60.0, -60.0, -0.5], [200.0, 80.0, 0.0], Rgb::new(0.16, 0.16, 0.17))];
    let blocks: [(f64, f64, f64, Rgb); 4] = [
        (-30.0, -5.0, 9.0, Rgb::new(0.55, 0.45, 0.38)),
        (2.0, 36.0, 14.0, Rgb::new(0.42, 0.44, 0.50)),
        (64.0, 92.0, 11.0, Rgb::new(0.60, 0.52, 0.40)),
        (98.0, 130.0, 16.0, Rgb::new(0.38, 0.40, 0.42)),
    ];
    for (i, (xa, xb, h, c)) in blocks.iter().enumerate() {
        let shade = if i % 2 == 0 { 1.0 } else { 0.85 };
        boxes.push(slab([*xa, 12.0, 0.0], [*xb, 22.0, *h], *c * shade));
        boxes.push(slab([*xa, -22.0, 0.0], [*xb, -12.0, h * 0.8], *c * (1.8 - shade)));
    }
    BoxField { boxes }
}

/// Analytic sky: a zenith-brightening blue dome, a sun lobe and a dark
/// lower hemisphere.
pub fn demo_sky(height: usize, width: usize) -> EnvironmentMap {
    let sun = SUN_DIRECTION.normalized();
    EnvironmentMap::from_fn(height, width, |r, c| {
        let d = equirect_dir_unchecked(r, c, height, width);
        if d.z < 0.0 {
            return Rgb::gray(0.05);
        }
        let dome = Rgb::new(0.30, 0.45, 0.85) * (0.6 + 0.4 * d.z);
        let lobe = (100.0 * (d.dot(sun) - 1.0)).exp() * 40.0;
        dome + Rgb::new(1.0, 0.95, 0.85) * lobe
    })
}

fn record(id: &str, ty: &str, color: &str, dims: (f64, f64, f64)) -> AssetRecord {
    AssetRecord {
        id: id.to_string(),
        asset_type: ty.to_string(),
        color: color_by_name(color).unwrap_or(Rgb::gray(0.5)),
        dimensions: Some(Dimensions { length: dims.0, width: dims.1, height: dims.2 }),
        origin_at_bottom_center: true,
        faces_plus_x: true,
        paint_material: Some(PAINT_MATERIAL.to_string()),
        mesh_path: alloc::format!("assets/{id}.glb"),
    }
}

pub fn demo_bank() -> AssetBank {
    AssetBank::new(alloc::vec![
        record("mini_cooper", "Mini", "green", (3.9, 1.75, 1.4)),
        record("police_car", "police car", "white", (4.9, 1.9, 1.5)),
        record("porsche_911", "Porsche", "red", (4.5, 1.85, 1.3)),
        record("sedan_red", "sedan", "red", (4.7, 1.8, 1.45)),
        record("silverado_chevrolet", "Chevrolet", "silver", (5.8, 2.0, 1.9)),
    ])
}

/// A vehicle captured in the source footage, parked in an oncoming lane.
pub fn scene_vehicle(id: &str, asset: &AssetRecord, pose: Pose2D) -> PlacedVehicle {
    let mut attributes = BTreeMap::new();
    attributes.insert("type".to_string(), json!(asset.asset_type));
    attributes.insert("color".to_string(), serde_json::to_value(asset.color).unwrap_or_default());
    attributes.insert("color_name".to_string(), json!(crate::assets::color_name(asset.color)));
    attributes.insert("origin".to_string(), json!("scene"));
    PlacedVehicle { instance_id: id.to_string(), asset_id: asset.id.clone(), pose, trajectory: None, attributes }
}

/// Stationary ego at the origin, 40 frames at 10 Hz, one red sedan and one
/// silver pickup in the oncoming lanes.
pub fn demo_scene() -> SceneState {
    let bank = demo_bank();
    let get = |id: &str| bank.get(id).cloned().unwrap_or_else(|| record(id, "car", "gray", (4.5, 1.8, 1.5)));
    SceneState {
        lane_map: demo_lane_map(),
        rig: demo_rig(),
        ego: Trajectory::stationary(Pose2D::new(0.0, 0.0, 0.0), FRAMES, 1.0 / FPS),
        vehicles: alloc::vec![
            scene_vehicle("scene_0", &get("sedan_red"), Pose2D::new(32.0, LANE_OFFSETS[0], PI)),
            scene_vehicle("scene_1", &get("silverado_chevrolet"), Pose2D::new(60.0, LANE_OFFSETS[1], PI)),
        ],
        deleted_ids: BTreeSet::new(),
        skydome: Some(demo_sky(16, 32)),
        background: Some(demo_background()),
        exposure_epsilon: ExposureStats::DEFAULT_EPSILON,
        view: ViewDelta::default(),
        history: Vec::new(),
    }
}

/// Empty scene on the demo map, for tests that place everything themselves.
pub fn empty_scene() -> SceneState {
    SceneState { vehicles: Vec::new(), ..demo_scene() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanes_are_staggered() {
        let m = demo_lane_map();
        let on = |y: f64, x: f64| m.nodes.iter().any(|n| (n.midpoint() - Vec2::new(x, y)).norm() < 1e-9);
        assert!(on(-1.75, -39.0));
        assert!(on(1.75, -38.0));
        assert!(on(-5.25, -38.0));
        assert!(on(5.25, -39.0));
    }

    #[test]
    fn sun_is_unit() {
        assert!((SUN_DIRECTION.norm() - 1.0).abs() < 1e-12);
    }
}
