//! The train / eval / demo runners behind the CLI.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use baselines::{
    episode_seed, evaluate_policy, format_table, EpisodeMetrics, EvalReport, PolicyDriver,
    PolicyKind, PolicySpec,
};
use highway_sim::generate_track;
use mdp_env::{LaneChangeEnv, StepEvent, TransitionRecord};
use qlearn::{save_checkpoint, select_action, sync_target, Experience, QNetwork, ReplayPools, Trainer, Workspace};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::CliError;

/// Safety cap on dec(isions per episode; a lap normally takes ~400.
const MAX_DECISIONS_PER_EPISODE: u64 = 5000;

/// Everything a finished training run leaves on disk.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub metrics_csv: PathBuf,
    pub episodes: Vec<EpisodeMetrics>,
}

fn io_err<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Io(format!("{what}: {e}"))
}

fn prepare_log_dir(config: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.log_dir)
        .map_err(io_err(&format!("create {}", config.log_dir.display())))?;
    // Catch unwritable directories up front.
    let probe = config.log_dir.join(".write_probe");
    std::fs::write(&probe, b"ok").map_err(io_err(&format!("write to {}", config.log_dir.display())))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

/// Train the shielded DQN agent for `config.episodes` episodes; writes a
/// per-episode CSV and the final checkpoint.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutcome, CliError> {
    config.validate()?;
    prepare_log_dir(config)?;
    let track = Arc::new(
        generate_track(config.track_seed, config.track_length)
            .map_err(|e| CliError::Config(format!("track: {e}")))?,
    );
    // The agent trains with the rule-based shield active.
    let mut env = LaneChangeEnv::new(track, config.env_config(true))
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut net = QNetwork::seeded(config.seed);
    let mut target = net.clone();
    let mut pools = ReplayPools::new(config.train.pool_capacity);
    let mut trainer = Trainer::new(config.train_config(), ChaCha8Rng::seed_from_u64(config.seed ^ 0x7261696E));
    let mut schedule = config.epsilon_schedule();
    let mut agent_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6167656E);
    let mut ws = Workspace::new();

    let csv_path = config.log_dir.join("training.csv");
    let mut csv = std::fs::File::create(&csv_path).map_err(io_err("training.csv"))?;
    writeln!(csv, "episode,avg_speed,lane_changes,collided,steps,cumulative_reward")
        .map_err(io_err("training.csv"))?;

    let mut episodes = Vec::with_capacity(config.episodes as usize);
    for ep in 0..config.episodes {
        let (mut grid, mut aux) = env
            .reset_episode(episode_seed(config.seed, ep))
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut collided = false;
        for _ in 0..MAX_DECISIONS_PER_EPISODE {
            let action = select_action(
                &net,
                grid.as_slice(),
                &aux.as_array(),
                schedule.value(),
                &mut agent_rng,
                &mut ws,
            )
            .expect("fixed shapes");
            schedule.advance();
            let step = env.env_step(action).map_err(|e| CliError::Config(e.to_string()))?;
            pools.push(Experience {
                grid: grid.as_slice().to_vec(),
                aux: aux.as_array(),
                action,
                reward: step.reward,
                next_grid: step.next_grid.as_slice().to_vec(),
                next_aux: step.next_aux.as_array(),
                done: step.done,
            });
            if trainer
                .train_step(&mut net, &target, &pools)
                .expect("fixed shapes")
                .is_some()
                && trainer.updates() % config.train.target_sync == 0
            {
                sync_target(&net, &mut target);
            }
            grid = step.next_grid;
            aux = step.next_aux;
            if step.done {
                collided = step.event == StepEvent::Collision;
                break;
            }
        }
        let metrics = EpisodeMetrics {
            episode: ep,
            avg_speed: env.episode_avg_speed(),
            lane_changes: env.lane_changes(),
            collided,
            steps: env.decisions(),
            cumulative_reward: env.cumulative_reward(),
        };
        writeln!(
            csv,
            "{},{:.6},{},{},{},{:.6}",
            metrics.episode,
            metrics.avg_speed,
            metrics.lane_changes,
            metrics.collided,
            metrics.steps,
            metrics.cumulative_reward
        )
        .map_err(io_err("training.csv"))?;
        episodes.push(metrics);
    }
    csv.flush().map_err(io_err("training.csv"))?;

    let checkpoint = config.log_dir.join("qnet.ckpt");
    save_checkpoint(&net, schedule.step_count(), &checkpoint)
        .map_err(|e| CliError::Io(format!("checkpoint: {e}")))?;
    Ok(TrainOutcome {
        checkpoint,
        metrics_csv: csv_path,
        episodes,
    })
}

/// Resolve the CLI policy name into a spec.
pub fn policy_spec(
    kind: PolicyKind,
    checkpoint: Option<&Path>,
    shield_override: Option<bool>,
) -> PolicySpec {
    let mut spec = PolicySpec::new(kind);
    spec.checkpoint = checkpoint.map(Path::to_path_buf);
    spec.shield_enabled = shield_override;
    spec
}

/// Evaluate one or more policies; writes JSON and, for several policies,
/// the aligned comparison table.
pub fn cmd_eval(
    config: &RunConfig,
    specs: &[PolicySpec],
    n_episodes: u32,
) -> Result<Vec<EvalReport>, CliError> {
    config.validate()?;
    if n_episodes == 0 {
        return Err(CliError::Config("eval episodes: must be at least 1".into()));
    }
    prepare_log_dir(config)?;
    let track = Arc::new(
        generate_track(config.track_seed, config.track_length)
            .map_err(|e| CliError::Config(format!("track: {e}")))?,
    );
    // Fail on missing checkpoints before any episode runs.
    for spec in specs {
        if matches!(spec.kind, PolicyKind::Dqn | PolicyKind::RuleBasedDqn) {
            match &spec.checkpoint {
                None => return Err(CliError::MissingArtifact(format!("{:?} needs --checkpoint", spec.kind))),
                Some(path) if !path.exists() => {
                    return Err(CliError::MissingArtifact(format!(
                        "checkpoint {} does not exist",
                        path.display()
                    )))
                }
                _ => {}
            }
        }
    }

    let base = config.env_config(true);
    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        let report = evaluate_policy(track.clone(), &base, spec, n_episodes, config.seed)?;
        reports.push(report);
    }

    let json_path = config.log_dir.join("eval.json");
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    std::fs::write(&json_path, json).map_err(io_err("eval.json"))?;
    let table = format_table(&reports);
    std::fs::write(config.log_dir.join("eval.txt"), &table).map_err(io_err("eval.txt"))?;
    print!("{table}");
    Ok(reports)
}

/// Run one episode, emitting a JSONL transition record per decision.
pub fn cmd_demo(config: &RunConfig, spec: &PolicySpec) -> Result<PathBuf, CliError> {
    config.validate()?;
    prepare_log_dir(config)?;
    let track = Arc::new(
        generate_track(config.track_seed, config.track_length)
            .map_err(|e| CliError::Config(format!("track: {e}")))?,
    );
    if matches!(spec.kind, PolicyKind::Dqn | PolicyKind::RuleBasedDqn) {
        match &spec.checkpoint {
            None => return Err(CliError::MissingArtifact(format!("{:?} needs --checkpoint", spec.kind))),
            Some(path) if !path.exists() => {
                return Err(CliError::MissingArtifact(format!(
                    "checkpoint {} does not exist",
                    path.display()
                )))
            }
            _ => {}
        }
    }

    let mut env = LaneChangeEnv::new(track, config.env_config(spec.shield()))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut driver = PolicyDriver::new(spec, config.seed)?;
    env.reset_episode(episode_seed(config.seed, 0))
        .map_err(|e| CliError::Config(e.to_string()))?;

    let path = config.log_dir.join("demo.jsonl");
    let mut out = std::fs::File::create(&path).map_err(io_err("demo.jsonl"))?;
    for _ in 0..MAX_DECISIONS_PER_EPISODE {
        let action = driver.decide(&env);
        let step = env.env_step(action).map_err(|e| CliError::Config(e.to_string()))?;
        let record = TransitionRecord::new(env.world(), action, &step);
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(out, "{line}").map_err(io_err("demo.jsonl"))?;
        if step.done {
            break;
        }
    }
    out.flush().map_err(io_err("demo.jsonl"))?;
    Ok(path)
}
