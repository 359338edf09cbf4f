use std::path::Path;
use std::process::{Command, Output};

fn cfquad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfquad"))
        .args(args)
        .output()
        .expect("failed to launch cfquad")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = cfquad(&[
        "run",
        "--out",
        path_str(&out),
        "--duration",
        "0.5",
        "--seed",
        "11",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().starts_with("t,x1,x2,"));
    // 0.5 s at 1 ms, every 10th step logged, both ends included.
    assert_eq!(lines.count(), 51);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["scenario"]["sim"]["duration"], 0.5);
    assert!(summary["abort"].is_null());
    assert!(String::from_utf8_lossy(&res.stderr).contains("rmse x"));
}

#[test]
fn scenario_file_is_merged_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("sc.json");
    std::fs::write(
        &scenario,
        r#"{"sim": {"duration": 0.2, "decimation": 1}, "gains": {"roll": {"k": 140}}}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let res = cfquad(&[
        "run",
        "--scenario",
        path_str(&scenario),
        "--out",
        path_str(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["scenario"]["gains"]["roll"]["k"], 140.0);
    assert_eq!(summary["scenario"]["gains"]["pitch"]["k"], 120.0);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 202);
}

#[test]
fn invalid_scenario_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.json");
    std::fs::write(&scenario, r#"{"gains": {"roll": {"tau": -1}}}"#).unwrap();
    let res = cfquad(&[
        "run",
        "--scenario",
        path_str(&scenario),
        "--out",
        path_str(&dir.path().join("o")),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("tau"));

    let res = cfquad(&[
        "run",
        "--out",
        path_str(&dir.path().join("o")),
        "--dt",
        "0.5",
    ]);
    assert_eq!(res.status.code(), Some(2));

    std::fs::write(&scenario, "{ not json").unwrap();
    let res = cfquad(&[
        "run",
        "--scenario",
        path_str(&scenario),
        "--out",
        path_str(&dir.path().join("o")),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn guard_abort_exits_with_3_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tilted.json");
    // Roll already past the guard margin.
    std::fs::write(
        &scenario,
        r#"{"initial_state": [1.55, 0, 0, 0, 0, 0, 0, 0, 2, 0, 1, 0], "sim": {"duration": 1.0}}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let res = cfquad(&[
        "run",
        "--scenario",
        path_str(&scenario),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["abort"]["kind"], "angle_guard");
    assert!(out.join("trace.csv").exists());
}

#[test]
fn sweep_runs_every_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("short.json");
    std::fs::write(&scenario, r#"{"sim": {"duration": 0.3}}"#).unwrap();
    let out = dir.path().join("sweep");
    let res = cfquad(&[
        "sweep",
        "--scenario",
        path_str(&scenario),
        "--vary",
        "gains.roll.k=100,140",
        "--vary",
        "sim.seed=1,2",
        "--out",
        path_str(&out),
        "--jobs",
        "2",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert!(rows[0].starts_with("run,gains.roll.k,sim.seed,status,rmse_x"));
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("003,140,2,ok,"));
    for i in 0..4 {
        let run = out.join(format!("run_{i:03}"));
        assert!(run.join("trace.csv").exists());
        assert!(run.join("summary.json").exists());
    }
    let last = read_json(&out.join("run_003").join("summary.json"));
    assert_eq!(last["scenario"]["gains"]["roll"]["k"], 140.0);
    assert_eq!(last["seed"], 2);
}

#[test]
fn sweep_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let res = cfquad(&[
        "sweep",
        "--vary",
        "gains.roll.kk=1,2",
        "--out",
        path_str(&dir.path().join("s")),
    ]);
    assert_eq!(res.status.code(), Some(2));
}
