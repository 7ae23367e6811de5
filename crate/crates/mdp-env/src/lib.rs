//! The lane-change MDP: occupancy-grid states, the penalty-shaped reward,
//! and decision-period stepping over the highway simulator.

mod action;
mod env;
mod error;
mod grid;
mod log;
mod reward;

pub use action::Action;
pub use env::{EnvConfig, LaneChangeEnv, StepEvent, StepResult};
pub use error::EnvError;
pub use grid::{encode_state, AuxFeatures, OccupancyGrid, GRID_COLS, GRID_ROWS};
pub use log::TransitionRecord;
pub use reward::{classify_decision, compute_reward, DecisionClass, RewardParams};
