use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glidesafe"));
    cmd.env_remove("GLIDE_JOBS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// CI-grid table shared by the tests, synthesized once through the binary.
fn ci_table() -> &'static Path {
    static TABLE: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    let (_, path) = TABLE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ci.json");
        let cfg = configs().join("default.json");
        let out = run(&["synthesize", "--config", s(&cfg), "--grid", "ci", "--out", s(&path)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (dir, path)
    });
    path
}

#[test]
fn synthesize_ci_grid_writes_312_entries() {
    let text = fs::read_to_string(ci_table()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["entries"].as_array().unwrap().len(), 312);
    assert_eq!(json["fingerprint"].as_str().unwrap().len(), 64);
}

#[test]
fn synthesize_prints_case_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"grid": {"delta_course_deg": [-90, 0, 90], "wind_speed_kts": [0, 10], "wind_direction_deg": [0, 180], "ref_airspeed_kts": 90}}"#,
    )
    .unwrap();
    let table = dir.path().join("t.json");
    let out = bin()
        .args(["synthesize", "--config", s(&cfg), "--out", s(&table)])
        .env("GLIDE_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("12 cases: "), "{text}");
    assert!(text.contains("min tangency margin"), "{text}");
}

#[test]
fn synthesis_output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"grid": {"delta_course_deg": [-45, 0, 45], "wind_speed_kts": [5], "wind_direction_deg": [0, 90, 180, 270], "ref_airspeed_kts": 90}}"#,
    )
    .unwrap();
    let tables: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|jobs| {
            let out = dir.path().join(format!("t{jobs}.json"));
            assert!(
                run(&["synthesize", "--config", s(&cfg), "--jobs", jobs, "--out", s(&out)])
                    .status
                    .success()
            );
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn invalid_envelope_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"envelope_kts": [100, 80]}"#).unwrap();
    let out = run(&[
        "synthesize",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("t.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_and_zero_jobs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    assert_eq!(
        run(&["synthesize", "--config", "/nonexistent.json", "--out", s(&t)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["synthesize", "--jobs", "0", "--out", s(&t)]).status.code(),
        Some(2)
    );
}

#[test]
fn seeded_simulation_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |name: &str| {
        let path = dir.path().join(name);
        let out = run(&[
            "simulate",
            "--table",
            s(ci_table()),
            "--random",
            "6",
            "--seed",
            "42",
            "--start",
            "0,0,2000,180",
            "--wind-kts",
            "15",
            "--wind-from-deg",
            "0",
            "--out",
            s(&path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let meta = fs::read_to_string(dir.path().join(format!("{name}.meta.json"))).unwrap();
        (fs::read(&path).unwrap(), meta)
    };
    let (a, meta_a) = sim("a.csv");
    let (b, meta_b) = sim("b.csv");
    assert_eq!(a, b);
    assert_eq!(meta_a, meta_b);
    let meta: serde_json::Value = serde_json::from_str(&meta_a).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["primitive_dchi_deg"].as_array().unwrap().len(), 6);
}

#[test]
fn explicit_sequence_with_unknown_course_change_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.json");
    fs::write(&seq, "[0, 37]").unwrap();
    let out = run(&[
        "simulate",
        "--table",
        s(ci_table()),
        "--sequence",
        s(&seq),
        "--out",
        s(&dir.path().join("t.csv")),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn explicit_sequence_accepts_keyed_form() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.json");
    fs::write(&seq, r#"{"dchi_deg": [90, -90, 0]}"#).unwrap();
    let csv = dir.path().join("t.csv");
    let out = run(&[
        "simulate",
        "--table",
        s(ci_table()),
        "--sequence",
        s(&seq),
        "--out",
        s(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let last = text.lines().last().unwrap();
    let t: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t - 70.0).abs() < 1e-6, "{last}");
}

#[test]
fn ten_minute_campaign_in_north_wind_stays_in_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let out = run(&[
        "simulate",
        "--table",
        s(ci_table()),
        "--min-duration-s",
        "600",
        "--seed",
        "5",
        "--start",
        "0,0,3000,180",
        "--wind-kts",
        "15",
        "--wind-from-deg",
        "0",
        "--out",
        s(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains(" 0 violations"), "{}", stdout(&out));

    let report = dir.path().join("report.json");
    let out = run(&["analyze", "--envelope", "80:100", "--report", s(&report), s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["violation_count"], 0);
    assert!(json["total_sim_time_s"].as_f64().unwrap() >= 600.0);

    let out = run(&["analyze", "--envelope", "90:100", "--report", s(&report), s(&csv)]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn analyze_rejects_unreadable_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "not,a,trajectory\n1,2,3\n").unwrap();
    let report = dir.path().join("r.json");
    for file in [s(&bad), "/nonexistent.csv"] {
        let out = run(&["analyze", "--envelope", "80:100", "--report", s(&report), file]);
        assert_eq!(out.status.code(), Some(2));
    }
    let out = run(&["analyze", "--envelope", "100:80", "--report", s(&report), s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_writes_sequence_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let out = run(&[
        "plan",
        "--table",
        s(ci_table()),
        "--start",
        "0,0,2000,0",
        "--goal",
        "1500,2500,100",
        "--dt",
        "0.05",
        "--out",
        s(&plan),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    let end = json["end"].as_array().unwrap();
    let (n, e) = (end[0].as_f64().unwrap(), end[1].as_f64().unwrap());
    assert!((n - 1500.0).hypot(e - 2500.0) <= 100.0);
    assert!(!json["steps"].as_array().unwrap().is_empty());
    assert!(dir.path().join("plan.csv").is_file());
}

#[test]
fn unreachable_goal_is_no_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "plan",
        "--table",
        s(ci_table()),
        "--start",
        "0,0,20,0",
        "--goal",
        "-5000,0,50",
        "--out",
        s(&dir.path().join("p.json")),
    ]);
    assert_eq!(out.status.code(), Some(5));
}
