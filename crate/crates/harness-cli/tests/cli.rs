//! Exit codes, file outputs, and determinism of the CLI surface.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> PathBuf {
    // target/<profile>/lane-dqn next to the test executable's directory.
    let mut path = std::env::current_exe().unwrap();
    path.pop(); // deps/
    path.pop(); // debug or release
    path.push(format!("lane-dqn{}", std::env::consts::EXE_SUFFIX));
    path
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lane_dqn_cli_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("spawn lane-dqn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn zero_episodes_is_a_config_error() {
    let dir = tmp_dir("zero_episodes");
    let out_dir = dir.join("out");
    let (code, _, err) = run(&[
        "train",
        "--episodes",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {err}");
    assert!(err.contains("episodes"));
}

#[test]
fn bad_config_field_is_reported_by_name() {
    let dir = tmp_dir("bad_field");
    let config = dir.join("config.json");
    std::fs::write(&config, r#"{ "train": { "gamma": 1.5 } }"#).unwrap();
    let (code, _, err) = run(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("gamma"), "stderr: {err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tmp_dir("unknown_key");
    let config = dir.join("config.json");
    std::fs::write(&config, r#"{ "episodez": 5 }"#).unwrap();
    let (code, _, err) = run(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("episodez"), "stderr: {err}");
}

#[test]
fn unwritable_log_dir_is_an_io_error() {
    let (code, _, err) = run(&[
        "train",
        "--episodes",
        "1",
        "--npc-count",
        "0",
        "--out",
        "/proc/definitely/not/writable",
    ]);
    assert_eq!(code, 3, "stderr: {err}");
}

#[test]
fn eval_without_checkpoint_is_a_missing_artifact() {
    let dir = tmp_dir("missing_ckpt");
    let (code, _, err) = run(&[
        "eval",
        "--policy",
        "dqn",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 4, "stderr: {err}");
    let (code, _, _) = run(&[
        "eval",
        "--policy",
        "rule-dqn",
        "--checkpoint",
        dir.join("nope.ckpt").to_str().unwrap(),
        "--out",
        dir.join("out2").to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
}

#[test]
fn single_episode_train_without_traffic_reaches_speed() {
    let dir = tmp_dir("train_one");
    let out_dir = dir.join("out");
    let (code, _, err) = run(&[
        "train",
        "--episodes",
        "1",
        "--npc-count",
        "0",
        "--seed",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let csv = std::fs::read_to_string(out_dir.join("training.csv")).unwrap();
    let lines: Vec<&str> = csv.trim().lines().collect();
    assert_eq!(lines.len(), 2, "header plus one row: {csv}");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0");
    let avg_speed: f64 = fields[1].parse().unwrap();
    assert!(avg_speed > 40.0, "unobstructed avg speed {avg_speed}");
    assert!(out_dir.join("qnet.ckpt").exists());
}

#[test]
fn eval_single_episode_safety_rate_is_binary() {
    let dir = tmp_dir("eval_one");
    let out_dir = dir.join("out");
    let (code, stdout, err) = run(&[
        "eval",
        "--policy",
        "rule",
        "--episodes",
        "1",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    assert!(stdout.contains("rule-based policy"));
    let json = std::fs::read_to_string(out_dir.join("eval.json")).unwrap();
    let reports: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rate = reports[0]["safety_rate"].as_f64().unwrap();
    assert!(rate == 0.0 || rate == 1.0, "safety rate {rate}");
}

#[test]
fn eval_is_byte_deterministic() {
    let dir = tmp_dir("eval_det");
    for tag in ["a", "b"] {
        let (code, _, err) = run(&[
            "eval",
            "--policy",
            "random",
            "--episodes",
            "2",
            "--seed",
            "9",
            "--out",
            dir.join(tag).to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    let a = std::fs::read(dir.join("a/eval.json")).unwrap();
    let b = std::fs::read(dir.join("b/eval.json")).unwrap();
    assert_eq!(a, b, "eval.json differs between identical runs");
}

#[test]
fn demo_writes_parseable_jsonl_with_one_record_per_decision() {
    let dir = tmp_dir("demo");
    let out_dir = dir.join("out");
    let (code, _, err) = run(&[
        "demo",
        "--policy",
        "rule",
        "--npc-count",
        "0",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let text = std::fs::read_to_string(out_dir.join("demo.jsonl")).unwrap();
    let mut decisions = 0usize;
    let mut changes = 0usize;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("every line parses");
        for key in [
            "tick",
            "s",
            "d",
            "speed",
            "action",
            "executed_action",
            "reward",
            "event",
            "shield_cancelled",
        ] {
            assert!(v.get(key).is_some(), "missing key {key}");
        }
        decisions += 1;
        if v["executed_action"] != "a0" {
            changes += 1;
        }
    }
    assert!(decisions > 100, "too few decisions: {decisions}");
    assert_eq!(changes, 0, "rule policy must not change lanes on an empty road");
    // Last record completes the lap.
    let last: serde_json::Value =
        serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["event"], "lap_complete");
}

#[test]
fn train_runs_are_byte_deterministic() {
    let dir = tmp_dir("train_det");
    for tag in ["a", "b"] {
        let (code, _, err) = run(&[
            "train",
            "--episodes",
            "1",
            "--seed",
            "4",
            "--out",
            dir.join(tag).to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    let csv_a = std::fs::read(dir.join("a/training.csv")).unwrap();
    let csv_b = std::fs::read(dir.join("b/training.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "training.csv differs between identical runs");
    let ckpt_a = std::fs::read(dir.join("a/qnet.ckpt")).unwrap();
    let ckpt_b = std::fs::read(dir.join("b/qnet.ckpt")).unwrap();
    assert_eq!(ckpt_a, ckpt_b, "checkpoints differ between identical runs");
}
