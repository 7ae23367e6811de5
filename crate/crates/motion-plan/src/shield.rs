//! Rule-based safety shield over lane-change decisions.
//!
//! The shield plans the proposed maneuver, predicts every interference
//! car at constant speed in its lane, and cancels the maneuver if any
//! sample over the horizon puts a car inside the lateral/longitudinal
//! conflict box around the planned ego position.

use highway_sim::{TrackMap, WorldState, TICK_SECONDS};

use crate::error::PlanError;
use crate::path::{plan_path, Maneuver, PlannedPath};
use crate::predict::predict_npc;
use crate::speed::SpeedControlConfig;

/// Conflict thresholds of the shield.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShieldConfig {
    /// Prediction horizon in seconds.
    pub horizon: f64,
    /// Lateral conflict half-width, m.
    pub lat_conflict: f64,
    /// Longitudinal conflict threshold, m.
    pub lon_threshold: f64,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        ShieldConfig {
            horizon: 3.0,
            lat_conflict: 2.5,
            lon_threshold: 6.0,
        }
    }
}

impl ShieldConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("horizon", self.horizon),
            ("lat_conflict", self.lat_conflict),
            ("lon_threshold", self.lon_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("shield {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Outcome of shielding one proposed maneuver.
#[derive(Debug, Clone, PartialEq)]
pub struct ShieldDecision {
    /// Maneuver to execute: the proposal, or `Keep` after a cancel.
    pub approved: Maneuver,
    pub cancelled: bool,
    /// Path for the approved maneuver, ready to execute.
    pub path: PlannedPath,
}

/// Screen `proposed` against predicted traffic; keep-lane always passes.
pub fn shield(
    track: &TrackMap,
    world: &WorldState,
    proposed: Maneuver,
    shield_config: &ShieldConfig,
    speed_config: &SpeedControlConfig,
) -> Result<ShieldDecision, PlanError> {
    if proposed == Maneuver::Keep {
        let path = plan_path(track, world, Maneuver::Keep, speed_config)?;
        return Ok(ShieldDecision {
            approved: Maneuver::Keep,
            cancelled: false,
            path,
        });
    }

    let path = plan_path(track, world, proposed, speed_config)?;
    if path_conflicts(world, &path, shield_config) {
        let keep = plan_path(track, world, Maneuver::Keep, speed_config)?;
        Ok(ShieldDecision {
            approved: Maneuver::Keep,
            cancelled: true,
            path: keep,
        })
    } else {
        Ok(ShieldDecision {
            approved: proposed,
            cancelled: false,
            path,
        })
    }
}

/// True when any predicted car enters the conflict box around the planned
/// ego positions within the horizon.
pub fn path_conflicts(world: &WorldState, path: &PlannedPath, config: &ShieldConfig) -> bool {
    let horizon_ticks = (config.horizon / TICK_SECONDS).floor() as usize;
    let predictions: Vec<_> = world
        .npcs
        .iter()
        .map(|npc| predict_npc(npc, config.horizon, TICK_SECONDS, world.loop_length))
        .collect();

    // Sample 0 is the current pose; sample k is the pose after k ticks.
    let ego_at = |k: usize| -> (f64, f64) {
        if k == 0 {
            (world.ego.s, world.ego.d)
        } else {
            let p = &path.points[k - 1];
            (p.s, p.d)
        }
    };

    let samples = horizon_ticks.min(path.points.len());
    for k in 0..=samples {
        let (es, ed) = ego_at(k);
        for pred in &predictions {
            let (ns, nd) = pred.samples[k];
            if (ed - nd).abs() >= config.lat_conflict {
                continue;
            }
            let mut ds = (ns - es) % world.loop_length;
            if ds > world.loop_length / 2.0 {
                ds -= world.loop_length;
            } else if ds <= -world.loop_length / 2.0 {
                ds += world.loop_length;
            }
            if ds.abs() < config.lon_threshold {
                return true;
            }
        }
    }
    false
}
