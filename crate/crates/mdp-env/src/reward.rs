//! Decision legality classification and the reward function.

use highway_sim::WorldState;

use crate::action::Action;
use crate::env::StepEvent;

/// Reward shaping constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    /// Speed normalization coefficient.
    pub lambda: f64,
    /// Reference speed in MPH.
    pub v_ref: f64,
    /// Collision penalty.
    pub r_co: f64,
    /// Illegal lane change (off the road edge) penalty.
    pub r_ch1: f64,
    /// Invalid lane change (no car ahead) penalty.
    pub r_ch2: f64,
    /// Cost added to every executed lane change.
    pub r_ch3: f64,
    /// How far ahead a leader makes a lane change non-invalid, m.
    pub front_car_range: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            lambda: 0.04,
            v_ref: 25.0,
            r_co: -10.0,
            r_ch1: -5.0,
            r_ch2: -3.0,
            r_ch3: -0.3,
            front_car_range: 60.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.r_co < self.r_ch1 && self.r_ch1 < self.r_ch2 && self.r_ch2 < self.r_ch3 && self.r_ch3 < 0.0) {
            return Err(format!(
                "penalties must be ordered r_co < r_ch1 < r_ch2 < r_ch3 < 0, got {} {} {} {}",
                self.r_co, self.r_ch1, self.r_ch2, self.r_ch3
            ));
        }
        if self.lambda <= 0.0 || !self.lambda.is_finite() {
            return Err(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(0.0..50.0).contains(&self.v_ref) {
            return Err(format!("v_ref must be in [0, 50), got {}", self.v_ref));
        }
        if self.front_car_range <= 0.0 {
            return Err(format!("front_car_range must be positive, got {}", self.front_car_range));
        }
        Ok(())
    }
}

/// What kind of decision the agent just made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionClass {
    /// Keep-lane.
    Normal,
    /// Executable lane change with a car ahead.
    LegalChange,
    /// Change off the road edge; executes as keep-lane.
    IllegalChange,
    /// Change with no car ahead within range; executes as keep-lane.
    InvalidChange,
}

/// Classify `chosen_action` in the current world.
pub fn classify_decision(world: &WorldState, chosen_action: Action, params: &RewardParams) -> DecisionClass {
    match chosen_action {
        Action::KeepLane => DecisionClass::Normal,
        Action::ChangeLeft if world.ego.lane() == 0 => DecisionClass::IllegalChange,
        Action::ChangeRight if world.ego.lane() == 2 => DecisionClass::IllegalChange,
        _ => {
            let leader = world.leader_in_lane(world.ego.s, world.ego.lane(), false);
            match leader {
                Some((_, gap)) if gap < params.front_car_range => DecisionClass::LegalChange,
                _ => DecisionClass::InvalidChange,
            }
        }
    }
}

/// Reward for a finished decision period.
///
/// `avg_speed` is the mean ego speed in MPH over the period; it only
/// enters the speed-shaped branches.
pub fn compute_reward(event: StepEvent, avg_speed: f64, params: &RewardParams) -> f64 {
    let speed_term = params.lambda * (avg_speed - params.v_ref);
    match event {
        StepEvent::Collision => params.r_co,
        StepEvent::IllegalChange => params.r_ch1,
        StepEvent::InvalidChange => params.r_ch2,
        StepEvent::LegalChange => speed_term + params.r_ch3,
        StepEvent::Normal | StepEvent::LapComplete => speed_term,
    }
}
