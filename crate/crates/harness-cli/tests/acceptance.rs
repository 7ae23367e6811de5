//! Acceptance suite: every release criterion as one test with a printed
//! pass line. Run with `cargo test -p harness-cli --test acceptance --
//! --nocapture` to see the lines; the heavyweight end-to-end comparison
//! trains five full agents and takes on the order of an hour on one core.

use std::path::PathBuf;
use std::sync::Arc;

use baselines::PolicyKind;
use harness_cli::{cmd_eval, cmd_train, policy_spec, RunConfig};
use highway_sim::{
    generate_track, lane_center, TrackMap, VehicleState, WorldState, MPH_TO_MPS, TICK_SECONDS,
};
use mdp_env::{
    classify_decision, compute_reward, encode_state, Action, EnvConfig, LaneChangeEnv,
    RewardParams, StepEvent, GRID_COLS, GRID_ROWS,
};
use motion_plan::{
    check_kinematic_limits, path_conflicts, plan_path, Maneuver, ShieldConfig, SpeedControlConfig,
};
use qlearn::{
    epsilon, gradient_check, greedy_action, select_action, sync_target, EpsilonSchedule,
    Experience, ProbeBatch, QNetwork, ReplayPools, TrainConfig, Trainer, Workspace, GRID_CELLS,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pass(name: &str, detail: String) {
    println!("[PASS] {name}: {detail}");
}

fn bundled_track() -> Arc<TrackMap> {
    Arc::new(generate_track(0, 6946.0).unwrap())
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("lane_dqn_acceptance").join(tag);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

// ---------------------------------------------------------------------
// Criterion: reward function reproduces every branch exactly.
// ---------------------------------------------------------------------
#[test]
fn reward_exactness() {
    let p = RewardParams::default();
    let cases: Vec<(StepEvent, f64, f64)> = vec![
        (StepEvent::Collision, 0.0, -10.0),
        (StepEvent::Collision, 49.0, -10.0),
        (StepEvent::IllegalChange, 10.0, -5.0),
        (StepEvent::InvalidChange, 47.0, -3.0),
        (StepEvent::LegalChange, 45.0, 0.04 * 20.0 - 0.3),
        (StepEvent::LegalChange, 25.0, -0.3),
        (StepEvent::Normal, 25.0, 0.0),
        (StepEvent::Normal, 10.0, -0.6),
        (StepEvent::Normal, 49.5, 0.04 * 24.5),
    ];
    for (event, v, expected) in cases {
        let r = compute_reward(event, v, &p);
        assert!(
            (r - expected).abs() < 1e-12,
            "{event:?} at {v}: {r} vs {expected}"
        );
    }
    // Normal drive stays inside [-1, 1) over the whole legal speed range.
    let mut worst: f64 = 0.0;
    for i in 0..=10_000 {
        let v = 50.0 * i as f64 / 10_001.0;
        let r = compute_reward(StepEvent::Normal, v, &p);
        assert!((-1.0..1.0).contains(&r), "normal reward {r} at {v}");
        worst = worst.max(r.abs());
    }
    pass("reward-exactness", format!("all branches exact to 1e-12, |normal| <= {worst:.4}"));
}

// ---------------------------------------------------------------------
// Criterion: epsilon schedule matches the closed form within 1e-9.
// ---------------------------------------------------------------------
#[test]
fn epsilon_schedule_matches_oracle() {
    let schedule = EpsilonSchedule::default();
    // High-precision oracle: binary exponentiation of the decay.
    let pow = |mut exp: u64| -> f64 {
        let mut result = 1.0f64;
        let mut base = 0.99985f64;
        while exp > 0 {
            if exp & 1 == 1 {
                result *= base;
            }
            base *= base;
            exp >>= 1;
        }
        result
    };
    let mut worst = 0.0f64;
    for step in [0u64, 1, 1_000, 10_000, 100_000] {
        let expected = pow(step).max(0.03);
        let got = epsilon(&schedule, step);
        let err = (got - expected).abs();
        assert!(err < 1e-9, "step {step}: {got} vs {expected}");
        worst = worst.max(err);
    }
    pass("epsilon-schedule", format!("max deviation {worst:.2e} across probe steps"));
}

// ---------------------------------------------------------------------
// Criterion: encoder equals brute-force cell enumeration on 1000 scenes.
// ---------------------------------------------------------------------
#[test]
fn encoder_matches_oracle_on_1000_scenes() {
    let track = bundled_track();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let world = random_grid_scene(&track, &mut rng);
        let (grid, aux) = encode_state(&world);
        let expected = oracle_grid(&world);
        for row in 0..GRID_ROWS {
            for col in 0..GRID_COLS {
                assert_eq!(
                    grid.get(row, col),
                    expected[row][col],
                    "case {case} cell ({row},{col})"
                );
            }
        }
        let lane = world.ego.lane();
        assert_eq!(aux.s1, world.ego.speed / 50.0);
        assert_eq!(aux.s2, if lane > 0 { 1.0 } else { 0.0 });
        assert_eq!(aux.s3, if lane < 2 { 1.0 } else { 0.0 });
    }
    pass("encoder-oracle", "1000 seeded scenes, exact cell-for-cell match".into());
}

fn random_grid_scene(track: &TrackMap, rng: &mut ChaCha8Rng) -> WorldState {
    let ego_lane = rng.random_range(0..3usize);
    let ego_s = rng.random_range(0.0..track.total_length());
    let ego = VehicleState::new(0, ego_s, lane_center(ego_lane), rng.random_range(0.0..49.5));
    let count = rng.random_range(0..=12usize);
    let npcs = (0..count)
        .map(|i| {
            let rel = rng.random_range(-45.0..75.0);
            VehicleState::new(
                i as u32 + 1,
                (ego_s + rel).rem_euclid(track.total_length()),
                lane_center(rng.random_range(0..3usize)),
                rng.random_range(0.0..48.0),
            )
        })
        .collect();
    WorldState::new(track, ego, npcs, 0)
}

/// Brute-force reference encoder (independent cell enumeration).
fn oracle_grid(world: &WorldState) -> Vec<Vec<f64>> {
    struct Car {
        rel: f64,
        id: u32,
        lane: usize,
        value: f64,
    }
    let ego = &world.ego;
    let mut cars = vec![Car {
        rel: 0.0,
        id: ego.id,
        lane: ego.lane(),
        value: ego.speed / 100.0,
    }];
    for npc in &world.npcs {
        let rel = world.signed_gap(ego.s, npc.s);
        if (-30.0..60.0).contains(&rel) {
            cars.push(Car {
                rel,
                id: npc.id,
                lane: npc.lane(),
                value: -npc.speed / 100.0,
            });
        }
    }
    let rows_of = |rel: f64| -> Vec<i64> {
        let mut best_k = i64::MIN;
        let mut best_err = f64::INFINITY;
        for k in -6..(GRID_ROWS as i64 + 6) {
            let center = 56.0 - 2.0 * k as f64;
            let err = (center - rel).abs();
            if err < best_err - 1e-12 || (err < best_err + 1e-12 && k > best_k) {
                best_err = err;
                best_k = k;
            }
        }
        (best_k..best_k + 4).collect()
    };
    let mut grid = vec![vec![1.0; GRID_COLS]; GRID_ROWS];
    for row in 0..GRID_ROWS as i64 {
        for col in 0..GRID_COLS {
            let mut winner: Option<&Car> = None;
            for car in &cars {
                if car.lane != col || !rows_of(car.rel).contains(&row) {
                    continue;
                }
                let better = match winner {
                    None => true,
                    Some(w) => {
                        car.rel.abs() < w.rel.abs()
                            || (car.rel.abs() == w.rel.abs() && car.id < w.id)
                    }
                };
                if better {
                    winner = Some(car);
                }
            }
            if let Some(car) = winner {
                grid[row as usize][col] = car.value;
            }
        }
    }
    grid
}

// ---------------------------------------------------------------------
// Criterion: analytic backprop matches finite differences on 20 nets.
// ---------------------------------------------------------------------
#[test]
fn gradient_check_on_twenty_nets() {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let net = QNetwork::seeded(9000 + seed);
        let probe = ProbeBatch::random(9100 + seed, 3);
        let err = gradient_check(&net, &probe, 200, 9200 + seed).unwrap();
        assert!(err < 1e-4, "net {seed}: max relative error {err}");
        worst = worst.max(err);
    }
    pass(
        "gradient-check",
        format!("20 nets x 200 parameters, worst relative error {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------
// Criterion: shield equals the brute-force oracle; adding cars is
// monotone toward cancelling.
// ---------------------------------------------------------------------
#[test]
fn shield_oracle_equivalence_and_monotonicity() {
    let track = bundled_track();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let shield_cfg = ShieldConfig::default();
    let speed_cfg = SpeedControlConfig::default();
    let mut cancels = 0usize;
    let mut monotone_checked = 0usize;
    for case in 0..1000 {
        let (mut world, maneuver) = random_shield_scene(&track, &mut rng);
        let path = plan_path(&track, &world, maneuver, &speed_cfg).unwrap();
        let fast = path_conflicts(&world, &path, &shield_cfg);
        let slow = shield_oracle(&world, &path, &shield_cfg);
        assert_eq!(fast, slow, "case {case}: shield {fast} vs oracle {slow}");
        if fast {
            cancels += 1;
            // Monotonicity: a new car never rescinds a cancel.
            let extra = VehicleState::new(
                99,
                (world.ego.s + rng.random_range(-80.0..80.0)).rem_euclid(track.total_length()),
                lane_center(rng.random_range(0..3usize)),
                rng.random_range(25.0..48.0),
            );
            world.npcs.push(extra);
            assert!(
                path_conflicts(&world, &path, &shield_cfg),
                "case {case}: extra car flipped cancel to approve"
            );
            monotone_checked += 1;
        }
    }
    assert!(cancels > 50, "scene generator produced too few conflicts: {cancels}");
    pass(
        "shield-oracle",
        format!("1000 scenes, zero mismatches; monotonicity on {monotone_checked} cancelled scenes"),
    );
}

fn random_shield_scene(track: &TrackMap, rng: &mut ChaCha8Rng) -> (WorldState, Maneuver) {
    let lane = rng.random_range(0..3usize);
    let ego_s = rng.random_range(0.0..track.total_length());
    let ego = VehicleState::new(0, ego_s, lane_center(lane), rng.random_range(15.0..49.5));
    let count = rng.random_range(0..=8usize);
    let npcs = (0..count)
        .map(|i| {
            VehicleState::new(
                i as u32 + 1,
                (ego_s + rng.random_range(-90.0..90.0)).rem_euclid(track.total_length()),
                lane_center(rng.random_range(0..3usize)),
                rng.random_range(25.0..48.0),
            )
        })
        .collect();
    let maneuver = match lane {
        0 => Maneuver::ChangeRight,
        2 => Maneuver::ChangeLeft,
        _ => {
            if rng.random_range(0..2) == 0 {
                Maneuver::ChangeLeft
            } else {
                Maneuver::ChangeRight
            }
        }
    };
    (WorldState::new(track, ego, npcs, 0), maneuver)
}

/// Independent tick-by-tick conflict simulation.
fn shield_oracle(world: &WorldState, path: &motion_plan::PlannedPath, cfg: &ShieldConfig) -> bool {
    let ticks = ((cfg.horizon / TICK_SECONDS) as usize).max(path.points.len());
    let len = world.loop_length;
    for k in 0..=ticks {
        let (es, ed) = if k == 0 {
            (world.ego.s, world.ego.d)
        } else if k - 1 < path.points.len() {
            let p = &path.points[k - 1];
            (p.s, p.d)
        } else {
            break;
        };
        for npc in &world.npcs {
            let t = k as f64 * TICK_SECONDS;
            let mut ns = npc.s + npc.speed * MPH_TO_MPS * t;
            while ns >= len {
                ns -= len;
            }
            while ns < 0.0 {
                ns += len;
            }
            let dd = (ed - npc.d).abs();
            if dd >= cfg.lat_conflict {
                continue;
            }
            let mut ds = (ns - es).abs();
            if ds > len / 2.0 {
                ds = len - ds;
            }
            if ds < cfg.lon_threshold {
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------
// Criterion: lane-change paths respect accel/jerk limits at eval speeds.
// ---------------------------------------------------------------------
#[test]
fn kinematic_limits_at_eval_speeds() {
    let track = bundled_track();
    let mut worst_accel = 0.0f64;
    let mut worst_jerk = 0.0f64;
    for speed in [20.0, 35.0, 49.5] {
        for (lane, maneuver) in [
            (0usize, Maneuver::ChangeRight),
            (1, Maneuver::ChangeLeft),
            (1, Maneuver::ChangeRight),
            (2, Maneuver::ChangeLeft),
        ] {
            for s0 in [0.0, 1234.5, 3456.0, 6000.0] {
                let ego = VehicleState::new(0, s0, lane_center(lane), speed);
                let world = WorldState::new(&track, ego, vec![], 0);
                let path = plan_path(&track, &world, maneuver, &SpeedControlConfig::default()).unwrap();
                let report = check_kinematic_limits(&path).unwrap();
                assert!(
                    report.ok,
                    "{maneuver:?} from lane {lane} at {speed} MPH (s={s0}): accel {:.2}, jerk {:.2}",
                    report.max_accel, report.max_jerk
                );
                worst_accel = worst_accel.max(report.max_accel);
                worst_jerk = worst_jerk.max(report.max_jerk);
            }
        }
    }
    pass(
        "kinematic-limits",
        format!("worst accel {worst_accel:.2} m/s^2, worst jerk {worst_jerk:.2} m/s^3 (limits 10/10)"),
    );
}

// ---------------------------------------------------------------------
// Criterion: frenet round trip under a micron over 10^4 samples.
// ---------------------------------------------------------------------
#[test]
fn frenet_round_trip_ten_thousand_samples() {
    let track = bundled_track();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let s = rng.random_range(0.0..track.total_length());
        let d = rng.random_range(-10.0..10.0);
        let (x, y) = track.frenet_to_cartesian(s, d).unwrap();
        let (s2, d2) = track.cartesian_to_frenet(x, y).unwrap();
        let err_s = track.signed_s_distance(s, s2).abs();
        let err_d = (d2 - d).abs();
        assert!(err_s < 1e-6 && err_d < 1e-6, "({s:.3},{d:.3}): ds {err_s}, dd {err_d}");
        worst = worst.max(err_s.max(err_d));
    }
    pass("frenet-round-trip", format!("10000 samples, worst error {worst:.2e} m"));
}

// ---------------------------------------------------------------------
// Criterion: DQN recovers the toy-MDP optimal policy in >= 9/10 seeds.
// ---------------------------------------------------------------------
#[test]
fn small_mdp_convergence() {
    let oracle = toy::optimal_policy();
    let mut hits = 0;
    for seed in 0..10u64 {
        if toy::train_policy(seed) == oracle {
            hits += 1;
        }
    }
    assert!(hits >= 9, "only {hits}/10 seeds recovered the optimal policy");
    pass("small-mdp-convergence", format!("{hits}/10 seeds match value iteration"));
}

/// The 5-state deterministic chain MDP with dummy grid encodings.
mod toy {
    use super::*;

    pub const STATES: usize = 5;
    const GAMMA: f64 = 0.95;

    pub fn transition(state: usize, action: Action) -> (usize, f64) {
        match action {
            Action::KeepLane => {
                if state == STATES - 1 {
                    (state, 1.0)
                } else {
                    (state, -0.3)
                }
            }
            Action::ChangeLeft => {
                if state == 0 {
                    (0, -0.5)
                } else {
                    (state - 1, -0.1)
                }
            }
            Action::ChangeRight => {
                if state == STATES - 1 {
                    (state, -0.5)
                } else {
                    (state + 1, -0.1)
                }
            }
        }
    }

    pub fn encode(state: usize) -> (Vec<f64>, [f64; 3]) {
        let mut grid = vec![1.0; GRID_CELLS];
        let top = 4 + state * 8;
        for row in top..top + 4 {
            for col in 0..3 {
                grid[row * 3 + col] = 0.1 + 0.08 * state as f64;
            }
        }
        let aux = [
            0.1 + 0.2 * state as f64,
            if state % 2 == 0 { 1.0 } else { 0.0 },
            if state < 3 { 1.0 } else { 0.0 },
        ];
        (grid, aux)
    }

    pub fn optimal_policy() -> [Action; STATES] {
        let mut v = [0.0f64; STATES];
        for _ in 0..10_000 {
            let mut next = [0.0f64; STATES];
            for s in 0..STATES {
                next[s] = Action::ALL
                    .iter()
                    .map(|&a| {
                        let (s2, r) = transition(s, a);
                        r + GAMMA * v[s2]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            let delta: f64 = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if delta < 1e-12 {
                break;
            }
        }
        let mut policy = [Action::KeepLane; STATES];
        for s in 0..STATES {
            let q: Vec<f64> = Action::ALL
                .iter()
                .map(|&a| {
                    let (s2, r) = transition(s, a);
                    r + GAMMA * v[s2]
                })
                .collect();
            policy[s] = greedy_action(&[q[0], q[1], q[2]]);
        }
        policy
    }

    pub fn train_policy(seed: u64) -> [Action; STATES] {
        let config = TrainConfig {
            gamma: GAMMA,
            batch: 16,
            target_sync: 100,
            learning_rate: 2e-3,
            grad_clip: 1.0,
            warmup: 64,
            pool_capacity: 4000,
        };
        let mut net = QNetwork::seeded(seed);
        let mut target = net.clone();
        let mut pools = ReplayPools::new(config.pool_capacity);
        let mut trainer = Trainer::new(config, ChaCha8Rng::seed_from_u64(seed ^ 0xABCD));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1234);
        let mut ws = Workspace::new();
        let mut schedule = EpsilonSchedule::new(1.0, 0.995, 0.05);

        let mut state = 0usize;
        let mut steps_in_episode = 0usize;
        for step in 0..900u64 {
            let (grid, aux) = encode(state);
            let action = select_action(&net, &grid, &aux, schedule.value(), &mut rng, &mut ws).unwrap();
            schedule.advance();
            let (next_state, reward) = transition(state, action);
            let (next_grid, next_aux) = encode(next_state);
            pools.push(Experience {
                grid,
                aux,
                action,
                reward,
                next_grid,
                next_aux,
                done: false,
            });
            if trainer.train_step(&mut net, &target, &pools).unwrap().is_some()
                && trainer.updates() % 100 == 0
            {
                sync_target(&net, &mut target);
            }
            state = next_state;
            steps_in_episode += 1;
            if steps_in_episode >= 12 {
                steps_in_episode = 0;
                state = (step as usize / 12 + 1) % STATES;
            }
        }

        let mut policy = [Action::KeepLane; STATES];
        for (s, slot) in policy.iter_mut().enumerate() {
            let (grid, aux) = encode(s);
            let q = net.forward(&grid, &aux, &mut ws).unwrap();
            *slot = greedy_action(&q);
        }
        policy
    }
}

// ---------------------------------------------------------------------
// Criterion: determinism of train + eval outputs, byte for byte.
// ---------------------------------------------------------------------
#[test]
fn train_and_eval_are_byte_identical() {
    let mut outputs = Vec::new();
    for tag in ["det_a", "det_b"] {
        let dir = scratch_dir(tag);
        let mut config = RunConfig::default();
        config.seed = 13;
        config.episodes = 3;
        config.log_dir = dir.clone();
        let outcome = cmd_train(&config).unwrap();
        let spec = policy_spec(PolicyKind::RuleBasedDqn, Some(&outcome.checkpoint), None);
        cmd_eval(&config, &[spec], 2).unwrap();
        outputs.push((
            std::fs::read(dir.join("training.csv")).unwrap(),
            std::fs::read(dir.join("qnet.ckpt")).unwrap(),
            std::fs::read(dir.join("eval.json")).unwrap(),
            std::fs::read(dir.join("eval.txt")).unwrap(),
        ));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "training.csv differs");
    assert_eq!(outputs[0].1, outputs[1].1, "qnet.ckpt differs");
    assert_eq!(outputs[0].2, outputs[1].2, "eval.json differs");
    assert_eq!(outputs[0].3, outputs[1].3, "eval.txt differs");
    pass(
        "determinism",
        "two identical train+eval runs produced byte-identical CSV, checkpoint, JSON, table".into(),
    );
}

// ---------------------------------------------------------------------
// Criterion: directional reproduction of the four-policy comparison
// across five training seeds.
// ---------------------------------------------------------------------
#[test]
fn table_comparison_direction_across_five_seeds() {
    let start = std::time::Instant::now();
    let mut speed_ok = 0u32;
    let mut change_ok = 0u32;
    let mut safety_ok = 0u32;
    let mut summaries = Vec::new();
    for seed in 0..5u64 {
        let dir = scratch_dir(&format!("table2_seed{seed}"));
        let mut config = RunConfig::default();
        config.seed = seed;
        config.log_dir = dir.clone();
        let t0 = std::time::Instant::now();
        let outcome = cmd_train(&config).unwrap();
        let train_minutes = t0.elapsed().as_secs_f64() / 60.0;

        let mut eval_config = config.clone();
        eval_config.seed = 1000 + seed;
        let specs = vec![
            policy_spec(PolicyKind::Random, None, None),
            policy_spec(PolicyKind::RuleBased, None, None),
            policy_spec(PolicyKind::Dqn, Some(&outcome.checkpoint), None),
            policy_spec(PolicyKind::RuleBasedDqn, Some(&outcome.checkpoint), None),
        ];
        let reports = cmd_eval(&eval_config, &specs, 10).unwrap();
        let random = &reports[0];
        let rule = &reports[1];
        let dqn = &reports[2];
        let rule_dqn = &reports[3];

        let speed = rule_dqn.avg_speed >= rule.avg_speed;
        let changes = rule_dqn.avg_changes <= 0.3 * random.avg_changes;
        let safety = rule_dqn.safety_rate >= dqn.safety_rate;
        speed_ok += speed as u32;
        change_ok += changes as u32;
        safety_ok += safety as u32;
        summaries.push(format!(
            "seed {seed} ({train_minutes:.1} min train): ruleDQN {:.2} MPH/{:.1} ch/{:.1} safe | rule {:.2} | random ch {:.1} | dqn safe {:.1} -> v:{} c:{} s:{}",
            rule_dqn.avg_speed,
            rule_dqn.avg_changes,
            rule_dqn.safety_rate,
            rule.avg_speed,
            random.avg_changes,
            dqn.safety_rate,
            speed as u8,
            changes as u8,
            safety as u8,
        ));
    }
    for line in &summaries {
        println!("  {line}");
    }
    assert!(speed_ok >= 4, "rule-based DQN faster than rule-based in only {speed_ok}/5 seeds");
    assert!(change_ok >= 4, "change-count criterion held in only {change_ok}/5 seeds");
    assert!(safety_ok >= 4, "safety ordering held in only {safety_ok}/5 seeds");
    pass(
        "table-comparison-direction",
        format!(
            "speed {speed_ok}/5, changes {change_ok}/5, safety {safety_ok}/5 in {:.0} min total",
            start.elapsed().as_secs_f64() / 60.0
        ),
    );
}

// ---------------------------------------------------------------------
// Supporting check: the classifier agrees with the environment contract
// used above (kept cheap; the heavy loops live in the crates' suites).
// ---------------------------------------------------------------------
#[test]
fn classification_toolchain_smoke() {
    let track = bundled_track();
    let mut env = LaneChangeEnv::new(track.clone(), EnvConfig::default()).unwrap();
    env.reset_episode(1).unwrap();
    let world = env.world();
    let class = classify_decision(world, Action::KeepLane, &RewardParams::default());
    assert_eq!(format!("{class:?}"), "Normal");
    pass("toolchain-smoke", "environment constructs and classifies".into());
}
