#![allow(dead_code)]

use nalgebra::Vector4;
use servokit::rng::ShiftRng;
use servokit::servo::{scene, ServoRig};

/// Seeded (start, goal) joint pairs with the whole target on the sensor at
/// both ends. Goals scatter ±0.1 rad around the nominal pose, starts a
/// further ±0.12 rad around the goal.
pub fn reachable_pairs(rig: &ServoRig, seed: u64, n: usize) -> Vec<(Vector4<f64>, Vector4<f64>)> {
    let mut rng = ShiftRng::new(seed);
    let nominal = scene::nominal_goal();
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let goal = nominal + Vector4::from_fn(|_, _| rng.uniform(-0.1, 0.1));
        let start = goal + Vector4::from_fn(|_, _| rng.uniform(-0.12, 0.12));
        if rig.visible(&goal) && rig.visible(&start) {
            pairs.push((start, goal));
        }
    }
    pairs
}
