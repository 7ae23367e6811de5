//! Finite-difference kinematic checking of planned paths.

use highway_sim::TICK_SECONDS;

use crate::error::PlanError;
use crate::path::PlannedPath;

/// Result of a kinematic-limit check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicReport {
    /// Peak planar acceleration magnitude, m/s^2.
    pub max_accel: f64,
    /// Peak planar jerk magnitude, m/s^3.
    pub max_jerk: f64,
    pub ok: bool,
}

/// Acceleration limit, m/s^2.
pub const ACCEL_LIMIT: f64 = 10.0;

/// Jerk limit, m/s^3.
pub const JERK_LIMIT: f64 = 10.0;

/// Differentiate the sampled path and compare against the 10 m/s^2 and
/// 10 m/s^3 budgets.
pub fn check_kinematic_limits(path: &PlannedPath) -> Result<KinematicReport, PlanError> {
    let pts = &path.points;
    if pts.len() < 4 {
        return Err(PlanError::NotEnoughPoints { got: pts.len() });
    }
    let dt = TICK_SECONDS;
    let vel: Vec<(f64, f64)> = pts
        .windows(2)
        .map(|w| ((w[1].x - w[0].x) / dt, (w[1].y - w[0].y) / dt))
        .collect();
    let acc: Vec<(f64, f64)> = vel
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0) / dt, (w[1].1 - w[0].1) / dt))
        .collect();
    let jerk: Vec<(f64, f64)> = acc
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0) / dt, (w[1].1 - w[0].1) / dt))
        .collect();
    let max_accel = acc
        .iter()
        .map(|(ax, ay)| (ax * ax + ay * ay).sqrt())
        .fold(0.0, f64::max);
    let max_jerk = jerk
        .iter()
        .map(|(jx, jy)| (jx * jx + jy * jy).sqrt())
        .fold(0.0, f64::max);
    Ok(KinematicReport {
        max_accel,
        max_jerk,
        ok: max_accel <= ACCEL_LIMIT && max_jerk <= JERK_LIMIT,
    })
}
