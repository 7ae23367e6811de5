//! Vehicle state and lane geometry.

/// Number of lanes on the drivable (right) side of the road.
pub const LANE_COUNT: usize = 3;

/// Lane width in meters.
pub const LANE_WIDTH: f64 = 4.0;

/// Lateral offset of lane `i`'s center: 2, 6, 10 m.
pub fn lane_center(lane: usize) -> f64 {
    LANE_WIDTH / 2.0 + lane as f64 * LANE_WIDTH
}

/// Lane index for a lateral offset, clamped to the drivable lanes.
pub fn lane_of(d: f64) -> usize {
    ((d / LANE_WIDTH).floor() as i64).clamp(0, LANE_COUNT as i64 - 1) as usize
}

/// Kinematic state of one vehicle in frenet coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub id: u32,
    /// Arc length along the loop, wrapped to `[0, total_length)`.
    pub s: f64,
    /// Lateral offset from the reference line, within `[0, 12]`.
    pub d: f64,
    /// Speed in MPH.
    pub speed: f64,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    pub fn new(id: u32, s: f64, d: f64, speed: f64) -> Self {
        VehicleState {
            id,
            s,
            d,
            speed,
            length: 5.5,
            width: 2.0,
        }
    }

    pub fn lane(&self) -> usize {
        lane_of(self.d)
    }
}

/// Scripted behavior of an interference car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpcBehavior {
    /// Preferred cruising speed in MPH, within `[30, 48]`.
    pub cruise_speed: f64,
    /// Gap below which the car relaxes to its leader's speed, in meters.
    pub follow_gap: f64,
    pub lane_change_enabled: bool,
}

impl NpcBehavior {
    pub fn cruising(cruise_speed: f64) -> Self {
        NpcBehavior {
            cruise_speed,
            follow_gap: 15.0,
            lane_change_enabled: false,
        }
    }
}
