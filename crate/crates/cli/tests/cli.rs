use std::fs;
use std::process::{Command, Output};

fn ws_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ws-sim"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn lists_the_four_builtins() {
    let o = ws_sim(&["scenario", "list-builtin"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "star\ncorridor\ncuhksz-1\ncuhksz-2\n"
    );
}

#[test]
fn validate_reports_bad_files_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        code(&ws_sim(&["scenario", "validate", bad.to_str().unwrap()])),
        2
    );
    assert_eq!(code(&ws_sim(&["scenario", "validate", "missing.json"])), 2);
    assert_eq!(code(&ws_sim(&["scenario", "validate", "corridor"])), 0);
}

#[test]
fn unknown_planner_is_invalid_input() {
    assert_eq!(
        code(&ws_sim(&[
            "simulate",
            "--scenario",
            "star",
            "--planner",
            "greedy"
        ])),
        2
    );
}

#[test]
fn infeasible_plan_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weak.json");
    // A charge that lasts 20 steps cannot reach the far end of the corridor.
    let text = fs::read_to_string(write_builtin("corridor", &path)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["energy"]["e_discharge"] = serde_json::json!(5.0);
    fs::write(&path, v.to_string()).unwrap();
    let o = ws_sim(&[
        "simulate",
        "--scenario",
        path.to_str().unwrap(),
        "--planner",
        "static-mstc",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

fn write_builtin(name: &str, path: &std::path::Path) -> std::path::PathBuf {
    let s = ws_sim_core::harness::builtin::builtin(name).unwrap();
    s.save(path).unwrap();
    path.to_path_buf()
}

#[test]
fn simulate_writes_trace_and_picture() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let img = dir.path().join("r.ppm");
    let o = ws_sim(&[
        "simulate",
        "--scenario",
        "star",
        "--planner",
        "mobile-bcd",
        "--seed",
        "2",
        "--trace",
        trace.to_str().unwrap(),
        "--render",
        img.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let t = metrics["t_finish"].as_u64().unwrap();
    let loaded = ws_sim_core::harness::EpisodeTrace::load(&trace).unwrap();
    assert_eq!(loaded.steps.len() as u64, t);
    assert!(fs::read(&img).unwrap().starts_with(b"P6\n120 120\n255\n"));
}

#[test]
fn same_seed_gives_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = ws_sim(&[
            "simulate",
            "--scenario",
            "star",
            "--planner",
            "static-mstc",
            "--seed",
            "9",
            "--trace",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        fs::read(p).unwrap()
    };
    assert_eq!(run("a.jsonl"), run("b.jsonl"));
}

#[cfg(unix)]
#[test]
fn external_policy_drives_the_team() {
    // Three agents on star: two workers and one station. Stand still.
    let cmd = "while read -r line; do echo '[[0,0],[0,0],[0,0]]'; done";
    let o = ws_sim(&[
        "simulate",
        "--scenario",
        "star",
        "--planner",
        "external",
        "--policy-cmd",
        cmd,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(metrics["t_finish"].is_null());
    assert_eq!(metrics["steps"].as_u64().unwrap(), 393);

    let short = "while read -r line; do echo '[[0,0]]'; done";
    let o = ws_sim(&[
        "simulate",
        "--scenario",
        "star",
        "--planner",
        "external",
        "--policy-cmd",
        short,
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    fs::write(
        &suite,
        r#"{"scenarios":["star"],"planners":["mobile-bcd","mobile-mstc","idle"],"seeds":2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_ws-sim"))
        .args([
            "bench",
            "--suite",
            suite.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .env("WS_SIM_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("star,idle,2,2,inf"));
    assert_eq!(
        fs::read_to_string(out.join("episodes.csv"))
            .unwrap()
            .lines()
            .count(),
        7
    );
    let results: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(results["summary"].as_array().unwrap().len(), 3);
    assert!(results["summary"][0]["mean_t_finish"].as_f64().unwrap() > 0.0);
}
