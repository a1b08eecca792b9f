//! Scripts and scenario builders shared by the integration tests.
#![allow(dead_code)]

use drivesim_core::demo::demo_lane_map;
use drivesim_core::math::{wrap_angle, Vec2};
use drivesim_core::motion::{MotionAction, MotionAttributes, MotionPlan};
use drivesim_core::scene::{LaneMap, LaneNode, Pose2D};
use drivesim_core::scene::EditConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

pub const MIXED: &str = "Remove all cars in the scene and add a Porsche driving the wrong way toward me fast. \
Additionally, add a police car also driving the wrong way and chasing behind the Porsche. \
The view should be moved 5 meters ahead and 0.5 meters above.";

pub const MULTI_ROUND: [&str; 2] = [
    "Ego vehicle drives ahead slowly. Add a car to the close front that is moving ahead.",
    "Modify the added car to turn left. Add a Chevrolet to the front of the added car. \
Add another vehicle to the left of the added Mini driving toward me.",
];

/// The sub-commands the mixed command decomposes into.
pub const MIXED_PARTS: [&str; 4] = [
    "Remove all cars.",
    "Add a Porsche driving the wrong way toward me fast.",
    "Add a police car also driving the wrong way and chasing behind the Porsche.",
    "The view should be moved 5 meters ahead and 0.5 meters above.",
];

/// The mixed command followed by an abstract one.
pub const MIXED_THEN_JAM: [&str; 2] = [MIXED, "Create a traffic jam."];

#[derive(Deserialize)]
pub struct Case {
    pub category: String,
    pub command: String,
    pub configs: Vec<Value>,
}

pub fn corpus() -> Vec<Case> {
    serde_json::from_str(include_str!("../fixtures/dsl_corpus.json")).unwrap()
}

/// The configs `case` must parse to in `round`.
pub fn expected(case: &Case, round: u32) -> Vec<EditConfig> {
    case.configs
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c["round"] = round.into();
            serde_json::from_value(c).unwrap()
        })
        .collect()
}

pub const SCENARIOS: u64 = 20;
pub const DT: f64 = 0.1;

pub struct Scenario {
    pub map: LaneMap,
    pub start: Pose2D,
}

fn transform(p: Vec2, angle: f64, shift: Vec2) -> Vec2 {
    p.rotated(angle) + shift
}

pub fn scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = rng.gen_range(-3.0..3.0);
    let shift = Vec2::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
    let base = demo_lane_map();
    // approach nodes: eastbound lanes 10-30 m before the crossing center
    let approach: Vec<&LaneNode> = base
        .nodes
        .iter()
        .filter(|n| {
            let m = n.midpoint();
            n.direction().x > 0.99 && (20.0..=40.0).contains(&m.x)
        })
        .collect();
    let n = approach[rng.gen_range(0..approach.len())];
    let m = n.midpoint();
    let map = LaneMap::new(
        base.nodes
            .iter()
            .map(|n| LaneNode { start: transform(n.start, angle, shift), end: transform(n.end, angle, shift), ..*n })
            .collect(),
    );
    let p = transform(m, angle, shift);
    Scenario { map, start: Pose2D::new(p.x, p.y, wrap_angle(n.heading() + angle)) }
}

pub fn categories() -> [(&'static str, MotionAttributes); 5] {
    let base = MotionAttributes::default();
    [
        ("straight", base.clone()),
        ("turn left", MotionAttributes { action: MotionAction::TurnLeft, ..base.clone() }),
        ("turn right", MotionAttributes { action: MotionAction::TurnRight, ..base.clone() }),
        ("fast", MotionAttributes { speed: 12.0, ..base.clone() }),
        ("slow", MotionAttributes { speed: 4.0, ..base }),
    ]
}

pub fn mean_speed(plan: &MotionPlan) -> f64 {
    let t = &plan.trajectory;
    t.path_length() / (t.end_time() - t.start_time())
}
