//! Rule-based longitudinal speed control.

use highway_sim::{move_toward, WorldState};

/// Parameters of the rule-based speed controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedControlConfig {
    /// Cruise setpoint in MPH, strictly below the 50 MPH limit.
    pub target_speed: f64,
    /// Follow the leader's speed when the center gap drops below this, m.
    pub follow_gap: f64,
    /// Setpoint slew per tick in MPH (0.224 MPH/tick is about 5 m/s^2).
    pub max_delta_per_tick: f64,
}

impl Default for SpeedControlConfig {
    fn default() -> Self {
        SpeedControlConfig {
            target_speed: 49.5,
            follow_gap: 30.0,
            max_delta_per_tick: 0.224,
        }
    }
}

impl SpeedControlConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..50.0).contains(&self.target_speed) {
            return Err(format!("target_speed must be in [0, 50), got {}", self.target_speed));
        }
        if self.follow_gap <= 0.0 {
            return Err(format!("follow_gap must be positive, got {}", self.follow_gap));
        }
        // 0.447 MPH per 0.02 s tick corresponds to 10 m/s^2.
        if !(0.0..=0.4475).contains(&self.max_delta_per_tick) {
            return Err(format!(
                "max_delta_per_tick must stay within the 10 m/s^2 budget, got {}",
                self.max_delta_per_tick
            ));
        }
        Ok(())
    }
}

/// Center gap the follow rule settles at, m.
const DESIRED_FOLLOW_GAP: f64 = 15.0;

/// Closing-speed bias per meter of gap error, MPH/m.
const GAP_GAIN: f64 = 0.3;

/// Core setpoint rule shared by the live controller and the path planner.
///
/// `leader` is the same-lane vehicle ahead as `(center gap m, speed MPH)`.
/// Inside `follow_gap` the target is the leader's speed plus a
/// gap-proportional term, so the ego closes smoothly onto a 15 m center
/// gap instead of stalling at the engagement distance. Returns
/// `(setpoint, raw_target)`: the slew-limited command for the next tick
/// and the speed it is converging to.
pub fn rule_setpoint(
    ego_speed: f64,
    leader: Option<(f64, f64)>,
    config: &SpeedControlConfig,
) -> (f64, f64) {
    let raw = match leader {
        Some((gap, leader_speed)) if gap < config.follow_gap => {
            (leader_speed + GAP_GAIN * (gap - DESIRED_FOLLOW_GAP)).clamp(0.0, config.target_speed)
        }
        _ => config.target_speed,
    };
    let setpoint = move_toward(ego_speed, raw, config.max_delta_per_tick).clamp(0.0, config.target_speed);
    (setpoint, raw)
}

/// Speed setpoint (MPH) for the ego's next tick.
pub fn longitudinal_command(world: &WorldState, config: &SpeedControlConfig) -> f64 {
    let leader = world
        .leader_in_lane(world.ego.s, world.ego.lane(), false)
        .map(|(v, gap)| (gap, v.speed));
    rule_setpoint(world.ego.speed, leader, config).0
}
