use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hiddenpt(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hiddenpt"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("HIDDENPT_WORKERS", w),
        None => cmd.env_remove("HIDDENPT_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn summary(text: &str) -> Value {
    let line = text.lines().find_map(|l| l.strip_prefix("# summary: ")).expect("summary line");
    serde_json::from_str(line).unwrap()
}

const SMALL_TRAJ: &str = r#"{"cutoff": 4, "trajectory": {"n_traj": 1000, "n_samples": 5}}"#;

#[test]
fn trajectories_default_has_one_row_per_sample() {
    let out = hiddenpt(&["trajectories"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(data_rows(&text).len(), 10);
    assert!(text.contains("# seed: 1\n"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "eps,t,trace_distance,mean_jumps,mean_survival");
    for row in data_rows(&text) {
        let d: f64 = row[2].parse().unwrap();
        assert!(d < 0.1, "trace distance {d}");
    }
}

#[test]
fn repeated_seed_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", SMALL_TRAJ);
    let a = hiddenpt(&["trajectories", "--config", &cfg, "--seed", "7"], Some("1"));
    let b = hiddenpt(&["trajectories", "--config", &cfg, "--seed", "7"], Some("3"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("# seed: 7\n"));
    let c = hiddenpt(&["trajectories", "--config", &cfg, "--seed", "8"], Some("1"));
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scan.json", r#"{"params": {"n_th": 0.2}, "grid": {"min": 1.3, "max": 1.5, "step": 0.02}, "cutoff": 6}"#);
    let first = hiddenpt(&["ep-scan", "--config", &cfg], None);
    assert!(first.status.success());
    let text = stdout(&first);
    let echoed = text.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let again = write_config(dir.path(), "echo.json", echoed);
    let second = hiddenpt(&["ep-scan", "--config", &again], None);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn hep_moves_with_temperature_and_lep_does_not() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n.json", r#"{"params": {"n_th": 0.1, "kappa": 1.0}}"#);
    let hep = summary(&stdout(&hiddenpt(&["ep-scan", "--config", &cfg], None)));
    let lep = summary(&stdout(&hiddenpt(&["lep-scan", "--config", &cfg], None)));
    let located = |s: &Value| s["located"].as_f64().unwrap();
    assert!((located(&hep) - 1.2).abs() <= 0.01 + 1e-9, "{hep}");
    assert!((located(&lep) - 1.0).abs() <= 0.01 + 1e-9, "{lep}");
    assert_eq!(lep["flagged"], Value::Bool(true));
}

#[test]
fn drive_increases_jump_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "eps.json",
        r#"{"cutoff": 5, "axis": "eps", "grid": {"min": 0.0, "max": 1.0, "step": 0.5}, "trajectory": {"n_traj": 1000, "n_samples": 2}}"#,
    );
    let out = hiddenpt(&["trajectories", "--config", &cfg], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let finals: Vec<f64> = summary(&stdout(&out))["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["final_mean_jumps"].as_f64().unwrap())
        .collect();
    assert_eq!(finals.len(), 3);
    assert!(finals.windows(2).all(|w| w[0] < w[1]), "{finals:?}");
}

#[test]
fn json_lines_output() {
    let out = hiddenpt(&["lep-scan", "--json"], None);
    assert!(out.status.success());
    let lines: Vec<Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["meta"]["command"], "lep-scan");
    assert_eq!(lines[0]["meta"]["config"]["mode"], "lep-scan");
    assert_eq!(lines.len(), 81 + 2);
    assert!(lines[1]["g"].is_f64());
    assert!(lines.last().unwrap()["summary"]["located"].is_f64());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lep.csv");
    let out = hiddenpt(&["lep-scan", "--out", path.to_str().unwrap()], None);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# hiddenpt"));
    assert!(text.contains("# units: absolute rate units (g is swept)\n"));
}

#[test]
fn spectrum_rows_cover_states_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", r#"{"grid": {"min": 0.0, "max": 0.5, "step": 0.1}, "n_values": [0.0, 0.2], "cutoff": 6}"#);
    let out = hiddenpt(&["spectrum", "--config", &cfg], None);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 6 * 2 * 8);
    assert!(rows.iter().any(|r| r[2] == "EF" && r[3] == "psi4"));
    assert!(rows.iter().any(|r| r[2] == "IF" && r[3] == "psi1"));
}

#[test]
fn liouvillian_check_passes_on_default_grid() {
    let out = hiddenpt(&["liouvillian-check"], None);
    assert!(out.status.success());
    let s = summary(&stdout(&out));
    assert_eq!(s["passed"], s["points"]);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad.json", "{\"grid\": {\"step\": 0.0}}", "grid.step"),
        ("syntax.json", "{\n  \"params\": {\"g\": }\n}", "line 2"),
        ("mode.json", r#"{"mode": "trajectories"}"#, "mode"),
        ("unknown.json", r#"{"gird": {}}"#, "gird"),
    ];
    for (name, body, needle) in cases {
        let cfg = write_config(dir.path(), name, body);
        let out = hiddenpt(&["ep-scan", "--config", &cfg], None);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{name}");
    }
    assert_eq!(hiddenpt(&["ep-scan", "--config", "/nonexistent.json"], None).status.code(), Some(1));
    assert_eq!(hiddenpt(&["liouvillian-check", "--cutoff", "9"], None).status.code(), Some(1));
    assert_eq!(hiddenpt(&["ep-scan", "--bogus"], None).status.code(), Some(1));
    assert_eq!(hiddenpt(&["ep-scan"], Some("zero")).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_two_and_keeps_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "guard.json",
        r#"{"cutoff": 3, "params": {"n_th": 0.3}, "trajectory": {"n_traj": 1000, "truncation_guard": 1e-12}}"#,
    );
    let out = hiddenpt(&["trajectories", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("# config: "));
    assert!(text.contains("# summary: "));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}
