//! Kinematic simulation of a closed three-lane highway loop.
//!
//! The world is described in frenet coordinates over a smooth closed
//! reference line: `s` is arc length along the line, `d` is the lateral
//! offset toward the road side. An ego vehicle follows externally planned
//! path points while scripted interference cars cruise with simple
//! gap-keeping.

mod error;
mod track;
mod units;
mod vehicle;
mod world;

pub use error::SimError;
pub use track::{generate_track, TrackMap, Waypoint};
pub use units::{move_toward, mph_to_mps, mps_to_mph, MPH_TO_MPS, TICK_SECONDS};
pub use vehicle::{lane_center, lane_of, NpcBehavior, VehicleState, LANE_COUNT, LANE_WIDTH};
pub use world::{detect_collision, spawn_npcs, step_world, PathPoint, WorldState, MAX_NPC_COUNT};
