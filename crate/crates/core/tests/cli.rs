//! End-to-end runs of the objnav binary: every subcommand, artifact
//! determinism, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn objnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_objnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = objnav(args);
    assert!(
        out.status.success(),
        "objnav {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(args: &[&str]) -> i32 {
    objnav(args).status.code().expect("exit code")
}

/// Tiny world and profile so the whole pipeline stays under a second.
fn make_dataset(dir: &Path, seed: &str) -> String {
    let out = dir.join("bench.episodes.json");
    run_ok(&[
        "--seed",
        seed,
        "dataset",
        "--out",
        out.to_str().unwrap(),
        "--grid-width",
        "11",
        "--grid-height",
        "11",
        "--min-rooms",
        "1",
        "--max-rooms",
        "2",
        "--min-objects",
        "1",
        "--max-objects",
        "1",
        "--seen-houses",
        "1",
        "--unseen-houses",
        "1",
        "--train-per-pair",
        "2",
        "--val-seen-per-pair",
        "1",
        "--test-seen-per-pair",
        "1",
        "--val-unseen-per-pair",
        "1",
        "--test-unseen-per-pair",
        "1",
        "--max-steps",
        "60",
    ]);
    out.to_str().unwrap().to_string()
}

#[test]
fn world_gen_is_idempotent_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&["--seed", "5", "world-gen", "--count", "3", "--out", out.to_str().unwrap(), "--grid-width", "12", "--grid-height", "12", "--min-rooms", "1", "--max-rooms", "2"]);
    }
    for name in ["index.json", "house-00.json", "house-01.json", "house-02.json"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
    let index: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("index.json")).unwrap()).unwrap();
    assert_eq!(index["format"], "objnav.houses");
    assert_eq!(index["seed"], 5);
    assert_eq!(index["houses"].as_array().unwrap().len(), 3);
    assert!(index["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn world_gen_count_zero_succeeds_with_empty_index() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["world-gen", "--count", "0", "--out", dir.path().join("w").to_str().unwrap()]);
    let index: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("w/index.json")).unwrap()).unwrap();
    assert_eq!(index["houses"].as_array().unwrap().len(), 0);
}

#[test]
fn dataset_emits_manifest_and_stats_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "11");
    let manifest = std::fs::read(&path).unwrap();
    let ds: serde_json::Value = serde_json::from_slice(&manifest).unwrap();
    assert_eq!(ds["format"], "objnav.dataset");
    assert_eq!(ds["seed"], 11);
    // 1 seen house × 5 classes × (2+1+1) + 1 unseen house × 5 classes × (1+1)
    assert_eq!(ds["episodes"].as_array().unwrap().len(), 30);

    let stats_txt = std::fs::read_to_string(dir.path().join("bench.stats.txt")).unwrap();
    for split in ["train", "val_seen", "test_seen", "val_unseen", "test_unseen"] {
        assert!(stats_txt.contains(split), "stats table lists {split}");
    }
    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("bench.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["format"], "objnav.stats");
    assert_eq!(stats["config_hash"], ds["config_hash"]);

    let dir2 = tempfile::tempdir().unwrap();
    let path2 = make_dataset(dir2.path(), "11");
    assert_eq!(manifest, std::fs::read(&path2).unwrap(), "same seed, same bytes");
}

#[test]
fn seed_env_var_is_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let status = Command::new(env!("CARGO_BIN_EXE_objnav"))
        .env("OBJNAV_SEED", "21")
        .args(["world-gen", "--count", "1", "--out", out.to_str().unwrap(), "--grid-width", "11", "--grid-height", "11", "--min-rooms", "1", "--max-rooms", "1"])
        .status()
        .unwrap();
    assert!(status.success());
    let index: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("index.json")).unwrap()).unwrap();
    assert_eq!(index["seed"], 21);
}

#[test]
fn stats_command_reads_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "12");
    let stdout = run_ok(&["stats", "--dataset", &path]);
    assert!(stdout.contains("train"));
    assert!(stdout.contains("chair"));
}

#[test]
fn eval_oracle_writes_report_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "13");
    let out = dir.path().join("eval");
    let stdout = run_ok(&[
        "--seed", "13", "eval", "--dataset", &path, "--split", "train", "--agent", "oracle", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("Success"), "report header printed");

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["format"], "objnav.eval");
    assert_eq!(report["agent"], "oracle");
    assert_eq!(report["success_rate"], 1.0);
    assert_eq!(report["mean_spl"], 1.0);
    assert_eq!(report["mean_dts"], 0.0);

    let traj_dir = out.join("trajectories");
    let logs: Vec<_> = std::fs::read_dir(&traj_dir).unwrap().collect();
    assert_eq!(logs.len(), 10, "one log per train episode");
}

#[test]
fn eval_rejects_unknown_split_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "14");
    let out = dir.path().join("e");
    // unknown split → usage/config
    assert_eq!(
        exit_code(&["eval", "--dataset", &path, "--split", "basement", "--agent", "oracle", "--out", out.to_str().unwrap()]),
        1
    );
    // unreadable dataset → I/O
    assert_eq!(
        exit_code(&["eval", "--dataset", "/nonexistent/ds.json", "--agent", "oracle", "--out", out.to_str().unwrap()]),
        3
    );
    // neither agent nor checkpoint → usage/config
    assert_eq!(exit_code(&["eval", "--dataset", &path, "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn replay_renders_a_deterministic_svg_and_detects_mismatched_houses() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "15");
    let out = dir.path().join("eval");
    run_ok(&["--seed", "15", "eval", "--dataset", &path, "--split", "train", "--agent", "random", "--out", out.to_str().unwrap(), "--limit", "1"]);
    let log = std::fs::read_dir(out.join("trajectories")).unwrap().next().unwrap().unwrap().path();

    let svg_path = dir.path().join("fig.svg");
    run_ok(&["replay", "--log", log.to_str().unwrap(), "--dataset", &path, "--out", svg_path.to_str().unwrap()]);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("#1f6feb"), "agent path in blue");
    assert!(svg.contains("#2da44e"), "optimal path in green");

    let svg2_path = dir.path().join("fig2.svg");
    run_ok(&["replay", "--log", log.to_str().unwrap(), "--dataset", &path, "--out", svg2_path.to_str().unwrap()]);
    assert_eq!(svg, std::fs::read_to_string(&svg2_path).unwrap(), "byte-identical rerun");

    // a different world cannot replay this log: contract error
    let other_dir = tempfile::tempdir().unwrap();
    let other = make_dataset(other_dir.path(), "16");
    assert_eq!(
        exit_code(&["replay", "--log", log.to_str().unwrap(), "--dataset", &other, "--out", svg_path.to_str().unwrap()]),
        2
    );
}

#[test]
fn train_writes_logs_and_checkpoints_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "17");
    let out = dir.path().join("run");
    run_ok(&[
        "--seed", "17", "train", "--dataset", &path, "--model", "reactive", "--out", out.to_str().unwrap(),
        "--updates", "2", "--horizon", "32", "--eval-every", "1", "--eval-limit", "2", "--minibatch", "16",
        "--epochs", "1",
    ]);
    assert!(out.join("latest.ckpt").is_file());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("latest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "reactive");
    assert_eq!(manifest["extra"]["updates"], 2);

    let log = std::fs::read_to_string(out.join("train.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records[0]["type"], "header");
    assert_eq!(records[0]["format"], "objnav.trainlog");
    assert_eq!(records.iter().filter(|r| r["type"] == "update").count(), 2);
    assert_eq!(records.iter().filter(|r| r["type"] == "eval").count(), 2);
    assert_eq!(records.last().unwrap()["type"], "done");

    // resume continues the update counter from the checkpoint
    run_ok(&[
        "--seed", "17", "train", "--dataset", &path, "--out", out.to_str().unwrap(),
        "--resume", out.join("latest").to_str().unwrap(),
        "--updates", "3", "--horizon", "32", "--eval-every", "0", "--minibatch", "16", "--epochs", "1",
    ]);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("latest.json")).unwrap()).unwrap();
    assert_eq!(manifest["extra"]["updates"], 3);

    // resuming under a different declared model kind is a contract error
    assert_eq!(
        exit_code(&[
            "train", "--dataset", &path, "--out", out.to_str().unwrap(),
            "--resume", out.join("latest").to_str().unwrap(), "--model", "lstm", "--updates", "4",
        ]),
        2
    );
}

#[test]
fn train_rejects_unknown_model_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let path = make_dataset(dir.path(), "18");
    let out = dir.path().join("run");
    assert_eq!(
        exit_code(&["train", "--dataset", &path, "--model", "perceptron", "--out", out.to_str().unwrap(), "--updates", "1"]),
        1
    );
}

#[test]
fn config_file_values_reach_the_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[env]\nmax_steps = 44\n\n[house]\ngrid_width = 11\ngrid_height = 11\nmin_rooms = 1\nmax_rooms = 1\n\n[profile]\nseen_houses = 1\nunseen_houses = 0\ntrain_per_pair = 1\nval_seen_per_pair = 0\ntest_seen_per_pair = 0\nval_unseen_per_pair = 0\ntest_unseen_per_pair = 0\n",
    )
    .unwrap();
    let out = dir.path().join("cfg.episodes.json");
    run_ok(&["--config", cfg.to_str().unwrap(), "--seed", "19", "dataset", "--out", out.to_str().unwrap()]);
    let ds: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(ds["env"]["max_steps"], 44);
    assert_eq!(ds["house_params"]["grid_width"], 11);
    assert_eq!(ds["episodes"].as_array().unwrap().len(), 5);
    // flags still beat the file
    let out2 = dir.path().join("cfg2.episodes.json");
    run_ok(&["--config", cfg.to_str().unwrap(), "--seed", "19", "dataset", "--out", out2.to_str().unwrap(), "--max-steps", "55"]);
    let ds2: serde_json::Value = serde_json::from_slice(&std::fs::read(&out2).unwrap()).unwrap();
    assert_eq!(ds2["env"]["max_steps"], 55);
}
