use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    /// Ego left the drivable corridor; no path can be anchored.
    #[error("ego lateral offset {d:.2} m is outside the road")]
    OutsideRoad { d: f64 },
    /// A lane change was requested off the edge of the road.
    #[error("maneuver targets lane {target}, which does not exist")]
    IllegalTarget { target: i64 },
    #[error("kinematic check needs at least 4 path points, got {got}")]
    NotEnoughPoints { got: usize },
    #[error("geometry: {0}")]
    Geometry(#[from] highway_sim::SimError),
}
