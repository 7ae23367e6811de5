//! Unit conversions and the simulation tick.

/// Meters per second in one mile per hour.
pub const MPH_TO_MPS: f64 = 0.44704;

/// Fixed simulation tick in seconds.
pub const TICK_SECONDS: f64 = 0.02;

pub fn mph_to_mps(mph: f64) -> f64 {
    mph * MPH_TO_MPS
}

pub fn mps_to_mph(mps: f64) -> f64 {
    mps / MPH_TO_MPS
}

/// Step `current` toward `target` by at most `max_delta` (non-negative).
pub fn move_toward(current: f64, target: f64, max_delta: f64) -> f64 {
    let delta = target - current;
    if delta.abs() <= max_delta {
        target
    } else {
        current + max_delta.copysign(delta)
    }
}
