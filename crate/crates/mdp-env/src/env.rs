//! Decision-period stepping of the lane-change MDP.

use std::sync::Arc;

use highway_sim::{
    detect_collision, lane_center, spawn_npcs, step_world, TrackMap, VehicleState, WorldState,
    TICK_SECONDS,
};
use motion_plan::{plan_path, shield, Maneuver, PlannedPath, ShieldConfig, SpeedControlConfig};
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::EnvError;
use crate::grid::{encode_state, AuxFeatures, OccupancyGrid};
use crate::reward::{classify_decision, compute_reward, DecisionClass, RewardParams};

/// What ended or characterized a decision period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepEvent {
    Normal,
    LegalChange,
    IllegalChange,
    InvalidChange,
    Collision,
    LapComplete,
}

/// Outcome of one decision period.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub next_grid: OccupancyGrid,
    pub next_aux: AuxFeatures,
    pub reward: f64,
    pub done: bool,
    pub event: StepEvent,
    /// Mean ego speed over the executed ticks, MPH.
    pub avg_speed: f64,
    pub executed_action: Action,
    pub shield_cancelled: bool,
}

/// Environment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub npc_count: usize,
    pub shield_enabled: bool,
    pub shield: ShieldConfig,
    pub speed: SpeedControlConfig,
    pub reward: RewardParams,
    /// Also charge `r_ch3` when the shield cancels a change.
    pub penalize_shielded_change: bool,
    /// Let interference cars change lanes too.
    pub npc_lane_changes: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            npc_count: 12,
            shield_enabled: true,
            shield: ShieldConfig::default(),
            speed: SpeedControlConfig::default(),
            reward: RewardParams::default(),
            penalize_shielded_change: false,
            npc_lane_changes: false,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.npc_count > highway_sim::MAX_NPC_COUNT {
            return Err(format!(
                "npc_count {} exceeds {}",
                self.npc_count,
                highway_sim::MAX_NPC_COUNT
            ));
        }
        self.shield.validate()?;
        self.speed.validate()?;
        self.reward.validate()?;
        Ok(())
    }
}

/// The lane-change decision environment over one world instance.
pub struct LaneChangeEnv {
    track: Arc<TrackMap>,
    config: EnvConfig,
    world: WorldState,
    done: bool,
    lap_distance: f64,
    // Episode aggregates.
    decisions: u64,
    lane_changes: u32,
    ticks: u64,
    speed_tick_sum: f64,
    cumulative_reward: f64,
}

impl LaneChangeEnv {
    pub fn new(track: Arc<TrackMap>, config: EnvConfig) -> Result<Self, EnvError> {
        config
            .validate()
            .map_err(highway_sim::SimError::InvalidArgument)?;
        let ego = VehicleState::new(0, 0.0, lane_center(1), 0.0);
        let world = WorldState::new(&track, ego, Vec::new(), 0);
        Ok(LaneChangeEnv {
            track,
            config,
            world,
            done: true,
            lap_distance: 0.0,
            decisions: 0,
            lane_changes: 0,
            ticks: 0,
            speed_tick_sum: 0.0,
            cumulative_reward: 0.0,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn track(&self) -> &TrackMap {
        &self.track
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    /// Completed lane-change maneuvers this episode.
    pub fn lane_changes(&self) -> u32 {
        self.lane_changes
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Mean ego speed in MPH over every tick of the episode.
    pub fn episode_avg_speed(&self) -> f64 {
        if self.ticks == 0 {
            0.0
        } else {
            self.speed_tick_sum / self.ticks as f64
        }
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward
    }

    /// Start an episode from a prepared scene instead of the spawn layout.
    ///
    /// The scene's own `rolling_traffic` flag is honored, so constructed
    /// test scenes stay exactly where they were placed.
    pub fn reset_from_scene(&mut self, world: WorldState) -> (OccupancyGrid, AuxFeatures) {
        self.world = world;
        if self.config.npc_lane_changes {
            self.world.enable_npc_lane_changes();
        }
        self.done = false;
        self.lap_distance = 0.0;
        self.decisions = 0;
        self.lane_changes = 0;
        self.ticks = 0;
        self.speed_tick_sum = 0.0;
        self.cumulative_reward = 0.0;
        encode_state(&self.world)
    }

    /// Start an episode: ego stationary at s = 0 in lane 1, fresh traffic.
    pub fn reset_episode(&mut self, seed: u64) -> Result<(OccupancyGrid, AuxFeatures), EnvError> {
        let ego = VehicleState::new(0, 0.0, lane_center(1), 0.0);
        let npcs = spawn_npcs(&self.track, seed, self.config.npc_count)?;
        self.world = WorldState::new(&self.track, ego, npcs, seed);
        // Keep the interference field populated for the whole lap.
        self.world.rolling_traffic = true;
        if self.config.npc_lane_changes {
            self.world.enable_npc_lane_changes();
        }
        self.done = false;
        self.lap_distance = 0.0;
        self.decisions = 0;
        self.lane_changes = 0;
        self.ticks = 0;
        self.speed_tick_sum = 0.0;
        self.cumulative_reward = 0.0;
        Ok(encode_state(&self.world))
    }

    /// Execute one decision: classify, shield, run the period tick by tick.
    pub fn env_step(&mut self, chosen_action: Action) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        self.decisions += 1;

        let class = classify_decision(&self.world, chosen_action, &self.config.reward);
        let mut shield_cancelled = false;
        let (path, executed_action) = match class {
            DecisionClass::LegalChange => {
                let maneuver = match chosen_action {
                    Action::ChangeLeft => Maneuver::ChangeLeft,
                    Action::ChangeRight => Maneuver::ChangeRight,
                    Action::KeepLane => unreachable!("keep-lane is never a change"),
                };
                if self.config.shield_enabled {
                    let decision = shield(
                        &self.track,
                        &self.world,
                        maneuver,
                        &self.config.shield,
                        &self.config.speed,
                    )?;
                    shield_cancelled = decision.cancelled;
                    let executed = if decision.cancelled { Action::KeepLane } else { chosen_action };
                    (decision.path, executed)
                } else {
                    let path = plan_path(&self.track, &self.world, maneuver, &self.config.speed)?;
                    (path, chosen_action)
                }
            }
            // Illegal and invalid changes execute as keep-lane.
            _ => {
                let path = plan_path(&self.track, &self.world, Maneuver::Keep, &self.config.speed)?;
                (path, Action::KeepLane)
            }
        };

        let (avg_speed, collided, lap_done, executed_ticks) = self.run_period(&path)?;

        let is_change_execution = executed_action.is_change();
        if is_change_execution && !collided && executed_ticks == path.points.len() {
            self.lane_changes += 1;
        }

        // Reward follows the decision class; a collision overrides. A
        // shield cancel is rewarded as normal drive unless configured to
        // still charge the change cost.
        let reward_event = if collided {
            StepEvent::Collision
        } else if shield_cancelled {
            StepEvent::Normal
        } else {
            match class {
                DecisionClass::Normal => StepEvent::Normal,
                DecisionClass::LegalChange => StepEvent::LegalChange,
                DecisionClass::IllegalChange => StepEvent::IllegalChange,
                DecisionClass::InvalidChange => StepEvent::InvalidChange,
            }
        };
        let mut reward = compute_reward(reward_event, avg_speed, &self.config.reward);
        if shield_cancelled && !collided && self.config.penalize_shielded_change {
            reward += self.config.reward.r_ch3;
        }

        let event = if collided {
            StepEvent::Collision
        } else if lap_done {
            StepEvent::LapComplete
        } else {
            reward_event
        };
        self.done = collided || lap_done;
        self.cumulative_reward += reward;

        let (next_grid, next_aux) = encode_state(&self.world);
        Ok(StepResult {
            next_grid,
            next_aux,
            reward,
            done: self.done,
            event,
            avg_speed,
            executed_action,
            shield_cancelled,
        })
    }

    /// Drive the world through `path`, stopping early on collision or lap
    /// completion. Returns (avg ego MPH, collided, lap done, ticks run).
    fn run_period(&mut self, path: &PlannedPath) -> Result<(f64, bool, bool, usize), EnvError> {
        let mut speed_sum = 0.0;
        let mut ran = 0usize;
        let mut collided = false;
        let mut lap_done = false;
        for point in &path.points {
            let prev_s = self.world.ego.s;
            step_world(&mut self.world, std::slice::from_ref(point), TICK_SECONDS)?;
            ran += 1;
            self.ticks += 1;
            speed_sum += self.world.ego.speed;
            self.speed_tick_sum += self.world.ego.speed;
            self.lap_distance += self.world.forward_gap(prev_s, self.world.ego.s);
            if detect_collision(&self.world) {
                collided = true;
                break;
            }
            if self.lap_distance >= self.track.total_length() {
                lap_done = true;
                break;
            }
        }
        let avg = if ran == 0 { self.world.ego.speed } else { speed_sum / ran as f64 };
        Ok((avg, collided, lap_done, ran))
    }
}
