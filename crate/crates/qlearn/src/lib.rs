//! From-scratch DQN: a convolutional Q-network with a hand-derived
//! backward pass, Adam updates, a synchronized target copy, split replay
//! pools, and the epsilon-greedy schedule.

mod adam;
mod checkpoint;
mod error;
mod gradcheck;
mod linalg;
mod network;
mod replay;
mod schedule;
mod train;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, ARCH_SPEC};
pub use error::QError;
pub use gradcheck::{gradient_check, ProbeBatch};
pub use network::{NetGrads, QNetwork, Workspace, ACTIONS, AUX_LEN, FLAT, GRID_CELLS};
pub use replay::{Experience, ReplayPools};
pub use schedule::{epsilon, EpsilonSchedule};
pub use train::{greedy_action, select_action, sync_target, td_targets, TrainConfig, Trainer};
