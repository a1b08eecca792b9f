//! Multi-round sessions over the demo scene.

mod common;

use common::{MIXED, MIXED_THEN_JAM, MULTI_ROUND};
use drivesim_core::assets::color_by_name;
use drivesim_core::demo::{demo_bank, demo_scene};
use drivesim_core::export::{export_scene, import_vehicles};
use drivesim_core::math::{angle_diff, Vec3};
use drivesim_core::orchestrator::{AgentRole, OrchestratorError, Session};
use drivesim_core::render::NoRender;
use drivesim_core::scene::{validate_scene, EditAction, PlacedVehicle};
use serde_json::Value;

fn session(seed: u64) -> Session {
    Session::new("test", demo_scene(), demo_bank(), seed)
}

fn run(seed: u64, script: &[&str]) -> Session {
    let mut s = session(seed);
    for cmd in script {
        s.command(cmd, &NoRender).unwrap_or_else(|e| panic!("{cmd:?}: {e}"));
    }
    s
}

fn attr<'a>(v: &'a PlacedVehicle, key: &str) -> &'a Value {
    v.attributes.get(key).unwrap_or(&Value::Null)
}

fn ids(s: &Session) -> Vec<&str> {
    s.state.vehicles.iter().map(|v| v.instance_id.as_str()).collect()
}

#[test]
fn mixed_command_decomposes_into_four_sub_commands() {
    let mut s = session(0);
    let r = s.command(MIXED, &NoRender).unwrap();
    let actions: Vec<EditAction> = r.configs.iter().map(|c| c.action).collect();
    assert_eq!(actions, [EditAction::Delete, EditAction::Add, EditAction::Add, EditAction::ViewChange]);
    assert_eq!(r.configs[0].param_str("scope"), Some("all"));
    assert_eq!(r.configs[1].param_str("asset_id"), Some("porsche_911"));
    assert_eq!(r.configs[2].param_str("asset_id"), Some("police_car"));
    for role in [AgentRole::VehicleDelete, AgentRole::AssetManage, AgentRole::VehicleMotion, AgentRole::ViewAdjust] {
        assert!(r.configs_by_role.contains_key(&role), "{role:?} got no config");
    }
    assert_eq!(r.configs_by_role[&AgentRole::AssetManage].len(), 2);

    assert_eq!(ids(&s), ["r0_1", "r0_2"]);
    assert_eq!(s.state.deleted_ids.iter().map(String::as_str).collect::<Vec<_>>(), ["scene_0", "scene_1"]);
    let (porsche, police) = (&s.state.vehicles[0], &s.state.vehicles[1]);
    assert_eq!(porsche.asset_id, "porsche_911");
    assert_eq!(attr(porsche, "crazy_mode"), &Value::Bool(true));
    assert_eq!(attr(porsche, "speed_mps").as_f64(), Some(12.0));
    assert_eq!(police.asset_id, "police_car");
    assert_eq!(attr(police, "crazy_mode"), &Value::Bool(true));
    assert_eq!(attr(police, "anchor").as_str(), Some("r0_1"));
    // behind the Porsche: on its lane, heading the same way
    let rel = police.pose.position() - porsche.pose.position();
    assert!(rel.dot(porsche.pose.direction()) < 0.0);
    assert!(angle_diff(police.pose.heading, porsche.pose.heading).abs() < 1e-9);
    assert_eq!(s.state.view.translation, Vec3::new(5.0, 0.0, 0.5));
    assert!(porsche.trajectory.is_some() && police.trajectory.is_some());
    assert!(validate_scene(&s.state).is_empty());
}

#[test]
fn multi_round_script_replays_to_final_contents() {
    let s = run(0, &MULTI_ROUND);
    assert_eq!(s.round_counter, 2);
    assert_eq!(ids(&s), ["scene_0", "scene_1", "r0_1", "r1_1", "r1_2"]);
    assert!(s.state.deleted_ids.is_empty());

    // ego drives ahead slowly
    let ego = &s.state.ego.samples;
    assert!(ego.windows(2).all(|w| w[1].x > w[0].x && w[1].y == 0.0));
    let speed = (ego[ego.len() - 1].x - ego[0].x) / (ego[ego.len() - 1].t - ego[0].t);
    assert!((speed - 4.0).abs() < 1e-9);

    let car = s.state.vehicle("r0_1").unwrap();
    assert_eq!(car.asset_id, "mini_cooper");
    assert_eq!(attr(car, "action").as_str(), Some("turn_left"));
    let t = car.trajectory.as_ref().unwrap();
    let last = t.samples.last().unwrap();
    assert!((angle_diff(car.pose.heading, last.heading) - core::f64::consts::FRAC_PI_2).abs() < 1e-6);

    let chevy = s.state.vehicle("r1_1").unwrap();
    assert_eq!(chevy.vehicle_type(), Some("Chevrolet"));
    assert_eq!(attr(chevy, "anchor").as_str(), Some("r0_1"));
    assert!((chevy.pose.position() - car.pose.position()).dot(car.pose.direction()) > 0.0);

    let other = s.state.vehicle("r1_2").unwrap();
    assert_eq!(attr(other, "anchor").as_str(), Some("r0_1"));
    let rel = other.pose.position() - car.pose.position();
    assert!(rel.cross(car.pose.direction()) < 0.0, "not on the Mini's left");
    // driving toward the ego vehicle
    assert!(other.pose.direction().dot(-other.pose.position()) > 0.0);
    assert!(validate_scene(&s.state).is_empty());
}

#[test]
fn abstract_round_fills_free_forward_lanes() {
    let s = run(0, &MIXED_THEN_JAM);
    let jam: Vec<&PlacedVehicle> = s.state.vehicles.iter().filter(|v| v.instance_id.starts_with("r1_")).collect();
    assert_eq!(jam.len(), 6);
    for v in &jam {
        assert_eq!(attr(v, "speed_mps").as_f64(), Some(0.5));
        assert_eq!(v.pose.heading, 0.0);
    }
    let mut lanes: Vec<f64> = jam.iter().map(|v| v.pose.y).collect();
    lanes.dedup();
    assert_eq!(lanes, [-5.25, -1.75]);
    for lane in lanes {
        let xs: Vec<f64> = jam.iter().filter(|v| v.pose.y == lane).map(|v| v.pose.x).collect();
        assert_eq!(xs.len(), 3);
        assert!(xs.windows(2).all(|w| (w[1] - w[0] - 8.0).abs() < 1e-9), "{xs:?}");
    }
    assert!(validate_scene(&s.state).is_empty());
}

#[test]
fn failed_rounds_leave_the_session_untouched() {
    let mut s = run(0, &MULTI_ROUND[..1]);
    let before = s.clone();
    let err = s.command("Modify the added Porsche to turn left.", &NoRender).unwrap_err();
    assert!(matches!(err, OrchestratorError::Role { .. }), "{err}");
    assert_eq!(s, before);
    let err = s.command("Make it rain.", &NoRender).unwrap_err();
    assert!(matches!(err, OrchestratorError::UnsupportedAbstraction(_)));
    assert_eq!(s, before);
    assert!(s.command("Add a zeppelin.", &NoRender).is_err());
    assert_eq!(s, before);
}

#[test]
fn replaying_the_log_reproduces_the_state() {
    let s = run(3, &MULTI_ROUND);
    let log: Vec<&str> = s.log.iter().map(String::as_str).collect();
    assert_eq!(run(3, &log), s);
}

#[test]
fn same_seed_exports_are_byte_identical() {
    for script in [&MULTI_ROUND[..], &MIXED_THEN_JAM[..]] {
        let a = run(7, script);
        let b = run(7, script);
        let ja = serde_json::to_vec(&export_scene(&a.state, &a.bank, Some("sky.pfm"))).unwrap();
        let jb = serde_json::to_vec(&export_scene(&b.state, &b.bank, Some("sky.pfm"))).unwrap();
        assert_eq!(ja, jb);
    }
}

#[test]
fn export_lists_added_vehicles_and_camera_delta() {
    let s = run(0, &[MIXED]);
    let doc = export_scene(&s.state, &s.bank, None);
    assert_eq!(doc.assets.len(), 2);
    assert_eq!(doc.trajectories.len(), 2);
    assert_eq!(doc.environment.probes.len(), 2);
    assert_eq!(doc.camera_delta.translation, Vec3::new(5.0, 0.0, 0.5));
    let text = serde_json::to_string(&doc).unwrap();
    let back = serde_json::from_str(&text).unwrap();
    assert_eq!(doc, back);
    assert_eq!(import_vehicles(&back), s.state.vehicles);
}

#[test]
fn revise_recolors_and_replans() {
    let mut s = run(0, &MULTI_ROUND[..1]);
    let old = s.state.vehicle("r0_1").unwrap().clone();
    s.command("Change the color of the added Mini to blue.", &NoRender).unwrap();
    let v = s.state.vehicle("r0_1").unwrap();
    assert_eq!(v.color(), color_by_name("blue"));
    assert_eq!(v.trajectory, old.trajectory);
    s.command("Make the added Mini faster.", &NoRender).unwrap();
    let v = s.state.vehicle("r0_1").unwrap();
    assert_eq!(attr(v, "speed_mps").as_f64(), Some(12.0));
    assert_eq!(v.pose, old.pose);
    assert_ne!(v.trajectory, old.trajectory);
}

#[test]
fn deleting_the_added_car_removes_it() {
    let mut s = run(0, &MULTI_ROUND[..1]);
    s.command("Remove it.", &NoRender).unwrap();
    assert_eq!(ids(&s), ["scene_0", "scene_1"]);
    s.command("Delete the red car.", &NoRender).unwrap();
    assert_eq!(ids(&s), ["scene_1"]);
    assert!(s.state.deleted_ids.contains("scene_0"));
}
