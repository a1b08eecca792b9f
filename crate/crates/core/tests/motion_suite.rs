//! Twenty rigidly transformed copies of the demo road network, each driven
//! with five motion categories.

mod common;

use std::time::Instant;

use common::{categories, mean_speed, scenario, DT, SCENARIOS};
use drivesim_core::motion::{generate_motion, within_road_rate, MotionAction, MotionAttributes};

#[test]
fn all_categories_stay_on_road_at_commanded_speed() {
    let clock = Instant::now();
    let mut runs = 0;
    for seed in 0..SCENARIOS {
        let sc = scenario(seed);
        for (name, attrs) in categories() {
            let plan = generate_motion(sc.start, &attrs, &sc.map, seed, DT)
                .unwrap_or_else(|e| panic!("scenario {seed} {name}: {e}"));
            let rate = within_road_rate(&plan.trajectory, &sc.map);
            assert_eq!(rate, 1.0, "scenario {seed} {name}: within-road rate {rate}");
            let err = (mean_speed(&plan) - attrs.speed).abs() / attrs.speed;
            assert!(err <= 0.05, "scenario {seed} {name}: speed error {err}");
            runs += 1;
        }
    }
    assert_eq!(runs, 100);
    assert!(clock.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn turns_end_on_crossing_lanes() {
    for seed in 0..SCENARIOS {
        let sc = scenario(seed);
        for (action, sign) in [(MotionAction::TurnLeft, 1.0), (MotionAction::TurnRight, -1.0)] {
            let attrs = MotionAttributes { action, ..Default::default() };
            let plan = generate_motion(sc.start, &attrs, &sc.map, seed, DT).unwrap();
            let turn = drivesim_core::math::angle_diff(sc.start.heading, plan.destination.heading);
            assert!((turn - sign * std::f64::consts::FRAC_PI_2).abs() < 1e-9, "scenario {seed}: turned {turn}");
        }
    }
}
