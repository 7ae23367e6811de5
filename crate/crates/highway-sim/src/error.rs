use thiserror::Error;

/// Errors raised by track construction and world stepping.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The queried point is too far from the reference line to project.
    #[error("point ({x:.2}, {y:.2}) is {distance:.2} m from the road corridor")]
    OutOfCorridor { x: f64, y: f64, distance: f64 },
    /// The ego controller supplied no path point for this tick.
    #[error("ego path segment is empty; planner starved the simulator")]
    PlannerStarvation,
    #[error("track file: {0}")]
    TrackFormat(String),
}
