//! The four lane-change policies under comparison and the shared
//! evaluation protocol: run seeded episodes, collect average speed,
//! lane-change counts, and the safety rate.

use std::path::PathBuf;
use std::sync::Arc;

use highway_sim::{TrackMap, WorldState};
use mdp_env::{encode_state, Action, EnvConfig, EnvError, LaneChangeEnv};
use qlearn::{greedy_action, load_checkpoint, QNetwork, Workspace};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("policy {0:?} requires a checkpoint path")]
    MissingCheckpoint(PolicyKind),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] qlearn::QError),
}

/// Which decision source drives the ego.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    RuleBased,
    Dqn,
    RuleBasedDqn,
}

impl PolicyKind {
    /// Shield default per policy: only the plain DQN runs unshielded.
    pub fn default_shield(self) -> bool {
        !matches!(self, PolicyKind::Dqn)
    }

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Random => "random-action policy",
            PolicyKind::RuleBased => "rule-based policy",
            PolicyKind::Dqn => "DQN-based policy",
            PolicyKind::RuleBasedDqn => "rule-based DQN policy",
        }
    }
}

/// A policy selection plus its evaluation options.
#[derive(Debug, Clone)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// None picks the per-kind default.
    pub shield_enabled: Option<bool>,
    pub checkpoint: Option<PathBuf>,
    /// Leader gap that triggers the rule-based lane change, m.
    pub rule_trigger_gap: f64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            shield_enabled: None,
            checkpoint: None,
            rule_trigger_gap: 20.0,
        }
    }

    pub fn shield(&self) -> bool {
        self.shield_enabled.unwrap_or_else(|| self.kind.default_shield())
    }
}

/// Uniform draw over the three actions; the shield downstream supplies
/// the collision-avoidance constraints.
pub fn random_policy(rng: &mut ChaCha8Rng) -> Action {
    Action::from_index(rng.random_range(0..3))
}

/// Lane change when blocked within the trigger gap and an adjacent lane's
/// front car is farther away; prefers left, then right, else keeps lane.
pub fn rule_based_policy(world: &WorldState, trigger_gap: f64) -> Action {
    let ego = &world.ego;
    let lane = ego.lane();
    let my_gap = match world.leader_in_lane(ego.s, lane, false) {
        Some((_, gap)) if gap < trigger_gap => gap,
        _ => return Action::KeepLane,
    };
    let lane_gap = |l: usize| -> f64 {
        world
            .leader_in_lane(ego.s, l, false)
            .map(|(_, gap)| gap)
            .unwrap_or(f64::INFINITY)
    };
    if lane > 0 && lane_gap(lane - 1) > my_gap {
        return Action::ChangeLeft;
    }
    if lane + 1 < highway_sim::LANE_COUNT && lane_gap(lane + 1) > my_gap {
        return Action::ChangeRight;
    }
    Action::KeepLane
}

/// A ready-to-run decision source built from a [`PolicySpec`].
pub enum PolicyDriver {
    Random(ChaCha8Rng),
    Rule { trigger_gap: f64 },
    Greedy { net: Box<QNetwork>, ws: Box<Workspace> },
}

impl PolicyDriver {
    pub fn new(spec: &PolicySpec, seed: u64) -> Result<Self, BaselineError> {
        build_decider(spec, seed)
    }

    pub fn decide(&mut self, env: &LaneChangeEnv) -> Action {
        match self {
            PolicyDriver::Random(rng) => random_policy(rng),
            PolicyDriver::Rule { trigger_gap } => rule_based_policy(env.world(), *trigger_gap),
            PolicyDriver::Greedy { net, ws } => {
                let (grid, aux) = encode_state(env.world());
                let q = net
                    .forward(grid.as_slice(), &aux.as_array(), ws)
                    .expect("fixed shapes");
                greedy_action(&q)
            }
        }
    }
}

/// Metrics of one evaluation or training episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: u32,
    /// Mean ego speed over the episode, MPH.
    pub avg_speed: f64,
    /// Completed lane-change maneuvers.
    pub lane_changes: u32,
    pub collided: bool,
    /// Decisions taken.
    pub steps: u64,
    pub cumulative_reward: f64,
}

/// Aggregated evaluation results for one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: PolicyKind,
    pub shield_enabled: bool,
    pub episodes: u32,
    pub avg_speed: f64,
    pub avg_changes: f64,
    /// Fraction of episodes without a collision.
    pub safety_rate: f64,
    pub per_episode: Vec<EpisodeMetrics>,
}

/// Derive a per-episode seed from the evaluation seed.
pub fn episode_seed(base: u64, episode: u32) -> u64 {
    // splitmix64 over the pair.
    let mut z = base ^ (0x9E3779B97F4A7C15u64.wrapping_mul(episode as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn build_decider(spec: &PolicySpec, seed: u64) -> Result<PolicyDriver, BaselineError> {
    match spec.kind {
        PolicyKind::Random => Ok(PolicyDriver::Random(ChaCha8Rng::seed_from_u64(seed ^ 0x52414E44))),
        PolicyKind::RuleBased => Ok(PolicyDriver::Rule {
            trigger_gap: spec.rule_trigger_gap,
        }),
        PolicyKind::Dqn | PolicyKind::RuleBasedDqn => {
            let path = spec
                .checkpoint
                .as_ref()
                .ok_or(BaselineError::MissingCheckpoint(spec.kind))?;
            let restored = load_checkpoint(path)?;
            Ok(PolicyDriver::Greedy {
                net: Box::new(restored.net),
                ws: Box::new(Workspace::new()),
            })
        }
    }
}

/// Run one full episode under the decider; returns its metrics.
fn run_episode(
    env: &mut LaneChangeEnv,
    decider: &mut PolicyDriver,
    episode: u32,
    seed: u64,
) -> Result<EpisodeMetrics, BaselineError> {
    env.reset_episode(seed)?;
    let mut collided = false;
    // Decision cap so a wedged policy cannot spin forever; a lap takes
    // around 400 decisions.
    for _ in 0..5000 {
        let action = decider.decide(env);
        let step = env.env_step(action)?;
        if step.done {
            collided = step.event == mdp_env::StepEvent::Collision;
            break;
        }
    }
    Ok(EpisodeMetrics {
        episode,
        avg_speed: env.episode_avg_speed(),
        lane_changes: env.lane_changes(),
        collided,
        steps: env.decisions(),
        cumulative_reward: env.cumulative_reward(),
    })
}

/// Evaluate `spec` over `n_episodes` seeded episodes.
///
/// Episode seeds derive from `seed` alone, so different policies on the
/// same seed face identical traffic.
pub fn evaluate_policy(
    track: Arc<TrackMap>,
    base_config: &EnvConfig,
    spec: &PolicySpec,
    n_episodes: u32,
    seed: u64,
) -> Result<EvalReport, BaselineError> {
    assert!(n_episodes >= 1, "evaluation needs at least one episode");
    let mut config = base_config.clone();
    config.shield_enabled = spec.shield();
    let mut env = LaneChangeEnv::new(track, config)?;
    let mut decider = build_decider(spec, seed)?;

    let mut per_episode = Vec::with_capacity(n_episodes as usize);
    for i in 0..n_episodes {
        let metrics = run_episode(&mut env, &mut decider, i, episode_seed(seed, i))?;
        per_episode.push(metrics);
    }
    let n = n_episodes as f64;
    let avg_speed = per_episode.iter().map(|m| m.avg_speed).sum::<f64>() / n;
    let avg_changes = per_episode.iter().map(|m| m.lane_changes as f64).sum::<f64>() / n;
    let safe = per_episode.iter().filter(|m| !m.collided).count() as f64;
    Ok(EvalReport {
        kind: spec.kind,
        shield_enabled: spec.shield(),
        episodes: n_episodes,
        avg_speed,
        avg_changes,
        safety_rate: safe / n,
        per_episode,
    })
}

/// Plain-text comparison table, one row per report.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:>12} {:>10} {:>12}\n",
        "policy", "avg v (MPH)", "avg c_ch", "safety rate"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<24} {:>12.2} {:>10.2} {:>12.2}\n",
            r.kind.label(),
            r.avg_speed,
            r.avg_changes,
            r.safety_rate
        ));
    }
    out
}
