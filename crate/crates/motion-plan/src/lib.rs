//! Low-level ego control: spline lane paths, rule-based longitudinal
//! speed, kinematic-limit checking, and the trajectory-prediction shield
//! that cancels dangerous lane-change decisions.

mod error;
mod limits;
mod path;
mod predict;
mod shield;
mod speed;

pub use error::PlanError;
pub use limits::{check_kinematic_limits, KinematicReport};
pub use path::{plan_path, Maneuver, PlannedPath};
pub use predict::{predict_npc, PredictedTrajectory};
pub use shield::{path_conflicts, shield, ShieldConfig, ShieldDecision};
pub use speed::{longitudinal_command, rule_setpoint, SpeedControlConfig};
