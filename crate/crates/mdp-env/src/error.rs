use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    /// `env_step` was called after the episode finished.
    #[error("episode is done; reset before stepping")]
    EpisodeDone,
    #[error(transparent)]
    Plan(#[from] motion_plan::PlanError),
    #[error(transparent)]
    Sim(#[from] highway_sim::SimError),
}
