//! Run configuration: JSON file with full defaulting, overridden by CLI
//! flags, validated before anything starts.

use std::path::{Path, PathBuf};

use mdp_env::{EnvConfig, RewardParams};
use motion_plan::{ShieldConfig, SpeedControlConfig};
use qlearn::{EpsilonSchedule, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ShieldSettings {
    pub horizon: f64,
    pub lat_conflict: f64,
    pub lon_threshold: f64,
}

impl Default for ShieldSettings {
    fn default() -> Self {
        let d = ShieldConfig::default();
        ShieldSettings {
            horizon: d.horizon,
            lat_conflict: d.lat_conflict,
            lon_threshold: d.lon_threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedSettings {
    pub target_speed: f64,
    pub follow_gap: f64,
    pub max_delta_per_tick: f64,
}

impl Default for SpeedSettings {
    fn default() -> Self {
        let d = SpeedControlConfig::default();
        SpeedSettings {
            target_speed: d.target_speed,
            follow_gap: d.follow_gap,
            max_delta_per_tick: d.max_delta_per_tick,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSettings {
    pub lambda: f64,
    pub v_ref: f64,
    pub r_co: f64,
    pub r_ch1: f64,
    pub r_ch2: f64,
    pub r_ch3: f64,
    pub front_car_range: f64,
    /// Charge the lane-change cost on shield cancels too.
    pub penalize_shielded_change: bool,
}

impl Default for RewardSettings {
    fn default() -> Self {
        let d = RewardParams::default();
        RewardSettings {
            lambda: d.lambda,
            v_ref: d.v_ref,
            r_co: d.r_co,
            r_ch1: d.r_ch1,
            r_ch2: d.r_ch2,
            r_ch3: d.r_ch3,
            front_car_range: d.front_car_range,
            penalize_shielded_change: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub gamma: f64,
    pub batch: usize,
    pub target_sync: u64,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub warmup: usize,
    pub pool_capacity: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            gamma: d.gamma,
            batch: d.batch,
            target_sync: d.target_sync,
            learning_rate: d.learning_rate,
            grad_clip: d.grad_clip,
            warmup: d.warmup,
            pool_capacity: d.pool_capacity,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSettings {
    pub start: f64,
    pub decay: f64,
    pub min: f64,
}

impl Default for EpsilonSettings {
    fn default() -> Self {
        let d = EpsilonSchedule::default();
        EpsilonSettings {
            start: d.eps0,
            decay: d.decay,
            min: d.eps_min,
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Training episodes.
    pub episodes: u32,
    pub npc_count: usize,
    pub track_seed: u64,
    pub track_length: f64,
    /// Interference cars may change lanes too (off by default).
    pub npc_lane_changes: bool,
    pub shield: ShieldSettings,
    pub speed: SpeedSettings,
    pub reward: RewardSettings,
    pub train: TrainSettings,
    pub epsilon: EpsilonSettings,
    pub log_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            episodes: 100,
            npc_count: 12,
            track_seed: 0,
            track_length: 6946.0,
            npc_lane_changes: false,
            shield: ShieldSettings::default(),
            speed: SpeedSettings::default(),
            reward: RewardSettings::default(),
            train: TrainSettings::default(),
            epsilon: EpsilonSettings::default(),
            log_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Validate every sub-config invariant; the message names the field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.episodes == 0 {
            return Err(CliError::Config("episodes: must be at least 1".into()));
        }
        if self.npc_count > highway_sim::MAX_NPC_COUNT {
            return Err(CliError::Config(format!(
                "npc_count: {} exceeds the {}-car limit",
                self.npc_count,
                highway_sim::MAX_NPC_COUNT
            )));
        }
        if !(self.track_length.is_finite() && self.track_length > 1000.0) {
            return Err(CliError::Config(format!(
                "track_length: must be finite and above 1000, got {}",
                self.track_length
            )));
        }
        self.shield_config()
            .validate()
            .map_err(|e| CliError::Config(format!("shield.{e}")))?;
        self.speed_config()
            .validate()
            .map_err(|e| CliError::Config(format!("speed.{e}")))?;
        self.reward_params()
            .validate()
            .map_err(|e| CliError::Config(format!("reward.{e}")))?;
        self.train_config()
            .validate()
            .map_err(|e| CliError::Config(format!("train.{e}")))?;
        self.epsilon_schedule()
            .validate()
            .map_err(|e| CliError::Config(format!("epsilon.{e}")))?;
        Ok(())
    }

    pub fn shield_config(&self) -> ShieldConfig {
        ShieldConfig {
            horizon: self.shield.horizon,
            lat_conflict: self.shield.lat_conflict,
            lon_threshold: self.shield.lon_threshold,
        }
    }

    pub fn speed_config(&self) -> SpeedControlConfig {
        SpeedControlConfig {
            target_speed: self.speed.target_speed,
            follow_gap: self.speed.follow_gap,
            max_delta_per_tick: self.speed.max_delta_per_tick,
        }
    }

    pub fn reward_params(&self) -> RewardParams {
        RewardParams {
            lambda: self.reward.lambda,
            v_ref: self.reward.v_ref,
            r_co: self.reward.r_co,
            r_ch1: self.reward.r_ch1,
            r_ch2: self.reward.r_ch2,
            r_ch3: self.reward.r_ch3,
            front_car_range: self.reward.front_car_range,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            gamma: self.train.gamma,
            batch: self.train.batch,
            target_sync: self.train.target_sync,
            learning_rate: self.train.learning_rate,
            grad_clip: self.train.grad_clip,
            warmup: self.train.warmup,
            pool_capacity: self.train.pool_capacity,
        }
    }

    pub fn epsilon_schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule::new(self.epsilon.start, self.epsilon.decay, self.epsilon.min)
    }

    /// Environment configuration with the given shield flag.
    pub fn env_config(&self, shield_enabled: bool) -> EnvConfig {
        EnvConfig {
            npc_count: self.npc_count,
            shield_enabled,
            shield: self.shield_config(),
            speed: self.speed_config(),
            reward: self.reward_params(),
            penalize_shielded_change: self.reward.penalize_shielded_change,
            npc_lane_changes: self.npc_lane_changes,
        }
    }
}
