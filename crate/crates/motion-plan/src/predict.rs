//! Constant-velocity lane-keeping prediction for interference cars.

use highway_sim::{mph_to_mps, VehicleState};

/// Predicted frenet trajectory of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedTrajectory {
    pub vehicle_id: u32,
    /// `(s, d)` samples at `dt` spacing; `d` is constant by assumption.
    pub samples: Vec<(f64, f64)>,
}

/// Predict a car holding its current speed and lane over `horizon` seconds.
///
/// Produces `floor(horizon / dt) + 1` samples including the current pose.
pub fn predict_npc(npc: &VehicleState, horizon: f64, dt: f64, loop_length: f64) -> PredictedTrajectory {
    assert!(horizon > 0.0 && dt > 0.0, "horizon and dt must be positive");
    let steps = (horizon / dt).floor() as usize;
    let speed = mph_to_mps(npc.speed);
    let samples = (0..=steps)
        .map(|k| {
            let s = (npc.s + speed * k as f64 * dt).rem_euclid(loop_length);
            (s, npc.d)
        })
        .collect();
    PredictedTrajectory {
        vehicle_id: npc.id,
        samples,
    }
}
