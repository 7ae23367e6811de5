//! Library side of the command-line harness: configuration, the training
//! loop, evaluation, and demo trace output.

mod config;
mod error;
mod run;

pub use config::{EpsilonSettings, RewardSettings, RunConfig, ShieldSettings, SpeedSettings, TrainSettings};
pub use error::CliError;
pub use run::{cmd_demo, cmd_eval, cmd_train, policy_spec, TrainOutcome};
