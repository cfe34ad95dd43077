use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tstar"))
        .args(args)
        .env_remove("TSTAR_SEED")
        .output()
        .expect("spawn tstar")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn simulate(dir: &Path, n: usize, frames: usize) -> PathBuf {
    let out = dir.join("data");
    let n = n.to_string();
    let frames = frames.to_string();
    let res = tstar(&["simulate", "--n", &n, "--frames", &frames, "--seed", "1", "--out", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    out.join("dataset.jsonl")
}

#[test]
fn version_is_json() {
    let res = tstar(&["--version"]);
    assert_eq!(res.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["name"], "tstar");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn search_writes_one_line_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate(dir.path(), 3, 4_000);
    let res = tstar(&["search", "--dataset", s(&dataset)]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 3);
    for r in &records {
        assert_eq!(r["keyframes"].as_array().unwrap().len(), 8);
        assert!(r["frames_processed"].as_u64().unwrap() <= 1_024);
        assert!(r["wall_time_s"].is_null());
        for key in ["instance_id", "terminal_reason", "iterations"] {
            assert!(!r[key].is_null(), "{key}");
        }
        let kf = &r["keyframes"][0];
        assert!(kf["index"].is_u64() && kf["timestamp"].is_f64() && kf["score"].is_f64());
    }
}

#[test]
fn budget_below_one_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate(dir.path(), 1, 2_000);
    let res = tstar(&["search", "--dataset", s(&dataset), "--budget", "10", "--grid", "8"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(res.stdout.is_empty());
    assert!(!res.stderr.is_empty());
}

#[test]
fn seed_flag_and_environment_agree() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate(dir.path(), 2, 3_000);
    let by_flag = tstar(&["search", "--dataset", s(&dataset), "--seed", "12"]);
    let by_env = Command::new(env!("CARGO_BIN_EXE_tstar"))
        .args(["search", "--dataset", s(&dataset)])
        .env("TSTAR_SEED", "12")
        .output()
        .unwrap();
    let other = tstar(&["search", "--dataset", s(&dataset), "--seed", "13"]);
    assert_eq!(by_flag.stdout, by_env.stdout);
    assert_ne!(by_flag.stdout, other.stdout);
}

#[test]
fn partial_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate(dir.path(), 3, 3_000);
    std::fs::write(dir.path().join("synth-00001.tsv"), "0\tneedle\t0.1\n").unwrap();
    let scorer = format!("file:{}/{{instance_id}}.tsv", s(dir.path()));
    let res = tstar(&["search", "--dataset", s(&dataset), "--scorer", &scorer]);
    assert_eq!(res.status.code(), Some(2));
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("synth-00001"));
}

fn worked_dataset(dir: &Path) -> PathBuf {
    let path = dir.join("worked.jsonl");
    std::fs::write(
        &path,
        r#"{"instance_id":"w","video_id":"v","frame_count":4000,"fps":30.0,"question":"q","targets":[{"label":"needle"}],"cues":[],"keyframe_timestamps_s":[10.0],"answer":""}"#,
    )
    .unwrap();
    path
}

fn eval_aggregate(dir: &Path, dataset: &Path, pred: &str) -> Output {
    let path = dir.join("pred.jsonl");
    std::fs::write(&path, pred).unwrap();
    tstar(&["eval", "--pred", s(&path), "--dataset", s(dataset), "--metric", "temporal", "--threshold", "5.0"])
}

fn prf(output: &Output) -> (f64, f64, f64) {
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8_lossy(&output.stdout);
    let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["type"], "aggregate");
    let m = &last["metrics"][0];
    (m["precision"].as_f64().unwrap(), m["recall"].as_f64().unwrap(), m["f1"].as_f64().unwrap())
}

#[test]
fn eval_reports_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = worked_dataset(dir.path());
    let kf = |i: usize| format!(r#"{{"index":{i},"timestamp":{},"score":1.0}}"#, i as f64 / 30.0);
    let pred = |frames: &[usize]| {
        let kfs: Vec<String> = frames.iter().map(|&i| kf(i)).collect();
        format!(r#"{{"instance_id":"w","keyframes":[{}]}}"#, kfs.join(","))
    };
    assert_eq!(prf(&eval_aggregate(dir.path(), &dataset, &pred(&[300]))), (100.0, 100.0, 100.0));
    assert_eq!(prf(&eval_aggregate(dir.path(), &dataset, &pred(&[3_000, 3_900]))), (0.0, 0.0, 0.0));
    assert_eq!(prf(&eval_aggregate(dir.path(), &dataset, &pred(&[360, 3_000]))), (50.0, 100.0, 66.7));
}

#[test]
fn eval_rejects_unknown_instances() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = worked_dataset(dir.path());
    let res = eval_aggregate(dir.path(), &dataset, r#"{"instance_id":"nope","keyframes":[]}"#);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nope"));
}

#[test]
fn simulate_writes_requested_instances() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate(dir.path(), 100, 10_000);
    let records = lines(&dataset);
    assert_eq!(records.len(), 100);
    assert!(records.iter().all(|r| r["frame_count"] == 10_000));
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("data/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["type"], "header");
    assert_eq!(manifest["args"]["n"], 100);
}

#[test]
fn bench_summarizes_each_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = simulate(dir.path(), 4, 5_000);
    let out = dir.path().join("bench.jsonl");
    let res = tstar(&["bench", "--dataset", s(&dataset), "--strategies", "uniform8,uniform32,tstar", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let records = lines(&out);
    assert_eq!(records[0]["type"], "header");
    assert_eq!(records[0]["args"]["strategies"], serde_json::json!(["uniform8", "uniform32", "tstar"]));
    let summaries: Vec<&Value> = records.iter().filter(|r| r["type"] == "summary").collect();
    assert_eq!(summaries.len(), 3);
    assert_eq!(records.iter().filter(|r| r["type"] == "record").count(), 12);
}

#[test]
fn complexity_writes_one_row_per_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let res = tstar(&[
        "complexity",
        "--lengths",
        "4096,65536",
        "--accuracies",
        "1.0",
        "--trials",
        "20",
        "--out",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], "L,p,mean_iterations,sd_iterations,mean_frames");
    assert!(rows[1].starts_with("4096,1,") && rows[2].starts_with("65536,1,"));
    let sidecar: Value = serde_json::from_slice(&std::fs::read(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(sidecar["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_flags_exit_one() {
    for args in [
        &["complexity", "--trials", "0"][..],
        &["simulate", "--n", "2", "--frames", "10", "--keyframes", "3", "--out", "/tmp/x"],
        &["bench", "--dataset", "/nonexistent.jsonl"],
        &["search", "--dataset", "/nonexistent.jsonl", "--theta", "abc"],
    ] {
        assert_eq!(tstar(args).status.code(), Some(1), "{args:?}");
    }
}
