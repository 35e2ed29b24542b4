use std::path::Path;
use std::process::{Command, Output};

fn tqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tqkd")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(header: &str, name: &str) -> usize {
    header.split(',').position(|c| c == name).unwrap()
}

fn summary(args: &[&str], dir: &Path) -> (i32, Vec<String>, String) {
    let path = dir.join("summary.csv");
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    full.extend(["--summary-csv", p]);
    let out = tqkd(&full);
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().next().unwrap().to_string();
    (out.status.code().unwrap(), csv_rows(&text).remove(0), header)
}

#[test]
fn exit_codes() {
    assert_eq!(tqkd(&["run", "--protocol", "GHZ1", "--num-states", "500"]).status.code(), Some(0));
    assert_eq!(tqkd(&["bogus"]).status.code(), Some(1));
    assert_eq!(tqkd(&["run", "--protocol", "NOPE"]).status.code(), Some(1));
    let attacked = tqkd(&["attack", "--protocol", "GHZ1", "--attack", "intercept-resend", "--num-states", "2000"]);
    assert_eq!(attacked.status.code(), Some(2));
}

#[test]
fn zero_states_is_a_usage_error() {
    let out = tqkd(&["run", "--protocol", "GHZ1", "--num-states", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_states"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("defaults.conf");
    std::fs::write(&cfg, "# defaults\nprotocol = GHZ3\nnum_states = 400\nseed = 5\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let (code, row, header) = summary(&["run", "--config", cfg], dir.path());
    assert_eq!(code, 0);
    assert_eq!(row[column(&header, "protocol")], "GHZ3");
    assert_eq!(row[column(&header, "num_states")], "400");

    let (_, row, header) = summary(&["run", "--config", cfg, "--num-states", "300"], dir.path());
    assert_eq!(row[column(&header, "num_states")], "300");
}

#[test]
fn tables_csv_rows_and_flags() {
    for (which, rows, mismatches) in [("bell", 16, 0), ("mixed", 16, 0), ("ghz", 16, 1)] {
        let out = tqkd(&["tables", which, "--format", "csv"]);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        let header = text.lines().next().unwrap();
        let flag = column(header, "matches_paper");
        let body = csv_rows(&text);
        assert_eq!(body.len(), rows, "{which}");
        assert_eq!(body.iter().filter(|r| r[flag] == "false").count(), mismatches, "{which}");
    }
}

#[test]
fn ghz3_keeps_everything() {
    let dir = tempfile::tempdir().unwrap();
    let (_, row, header) = summary(&["run", "--protocol", "GHZ3", "--num-states", "2000", "--seed", "3"], dir.path());
    assert_eq!(row[column(&header, "kept_fraction")].parse::<f64>().unwrap(), 1.0);
    assert_eq!(row[column(&header, "efficiency_bound")].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn bell5_keeps_about_half() {
    let dir = tempfile::tempdir().unwrap();
    let (_, row, header) = summary(&["run", "--protocol", "BELL5", "--num-states", "10000", "--seed", "4"], dir.path());
    let kept: f64 = row[column(&header, "kept_fraction")].parse().unwrap();
    assert!((kept - 0.5).abs() <= 0.02, "{kept}");
}

#[test]
fn run_writes_transcript_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let key = dir.path().join("k.hex");
    let out = tqkd(&[
        "run", "--protocol", "GHZ2", "--num-states", "2000", "--seed", "8",
        "--out", json.to_str().unwrap(), "--key-out", key.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(t["config"]["protocol"], "GHZ2");
    assert!(std::fs::read_to_string(&key).unwrap().starts_with("# stage=final"));
}

#[test]
fn bench_with_no_protocols_prints_header_only() {
    let out = tqkd(&["bench", "--protocols", "", "--num-states", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn bench_kept_fraction_falls_with_loss() {
    let out = tqkd(&["bench", "--protocols", "GHZ1", "--loss-grid", "0,0.1,0.5", "--num-states", "5000", "--seed", "1"]);
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    let kept = column(header, "kept_fraction");
    let values: Vec<f64> = csv_rows(&text).iter().map(|r| r[kept].parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
}

#[test]
fn bench_at_zero_loss_beats_baseline_and_ghz3_leads() {
    let out = tqkd(&["bench", "--loss-grid", "0", "--num-states", "4000", "--seed", "2"]);
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    let (p, eff) = (column(header, "protocol"), column(header, "efficiency_measured"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    let ghz3: f64 = rows.iter().find(|r| r[p] == "GHZ3").unwrap()[eff].parse().unwrap();
    for r in &rows {
        let e: f64 = r[eff].parse().unwrap();
        assert!(e > 0.125, "{r:?}");
        assert!(e <= ghz3, "{r:?}");
    }
}

#[test]
fn network_scenario_reports_every_session() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(
        &scenario,
        r#"{"users": ["a", "b", "c"], "seed": 1,
            "sessions": [{"requester": "a", "responder": "b", "config": {"protocol": "GHZ1", "num_states": 1000}},
                         {"requester": "c", "responder": "a", "config": {"protocol": "BELL4", "num_states": 1000}}]}"#,
    )
    .unwrap();
    let report = dir.path().join("r.json");
    let out = tqkd(&["network", "--scenario", scenario.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["sessions"].as_array().unwrap().len(), 2);
}

#[test]
fn network_rejects_unknown_user() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(
        &scenario,
        r#"{"users": ["a"], "sessions": [{"requester": "a", "responder": "z"}]}"#,
    )
    .unwrap();
    let out = tqkd(&["network", "--scenario", scenario.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn cheating_center_and_silent_ancilla() {
    let cheat = tqkd(&["attack", "--protocol", "GHZ1", "--attack", "cheating-center", "--basis", "x", "--num-states", "4000"]);
    assert_eq!(cheat.status.code(), Some(2));
    let quiet = tqkd(&["attack", "--protocol", "GHZ1", "--attack", "ancilla", "--coupling", "0", "--num-states", "2000"]);
    assert_eq!(quiet.status.code(), Some(0));
    assert!(stdout(&quiet).contains("observed 0.000000"));
}
