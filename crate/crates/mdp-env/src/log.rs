//! Transition log records, one JSON object per decision.

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::env::{StepEvent, StepResult};
use highway_sim::WorldState;

/// One decision's log entry; serialized as a JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionRecord {
    /// World tick when the period finished.
    pub tick: u64,
    pub s: f64,
    pub d: f64,
    /// Ego speed in MPH at the end of the period.
    pub speed: f64,
    pub action: Action,
    pub executed_action: Action,
    pub reward: f64,
    pub event: StepEvent,
    pub shield_cancelled: bool,
}

impl TransitionRecord {
    pub fn new(world: &WorldState, action: Action, step: &StepResult) -> Self {
        TransitionRecord {
            tick: world.tick,
            s: world.ego.s,
            d: world.ego.d,
            speed: world.ego.speed,
            action,
            executed_action: step.executed_action,
            reward: step.reward,
            event: step.event,
            shield_cancelled: step.shield_cancelled,
        }
    }
}
