use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const INCREMENT: &str = r#"{
  "states": ["q", "h"],
  "halt_states": ["h"],
  "symbols": ["_", "1"],
  "tapes": 1,
  "max_skip": 1,
  "initial_state": "q",
  "table": [
    {"state": "q", "read": ["1"], "write": ["1"], "move": [1], "next": "q"},
    {"state": "q", "read": ["_"], "write": ["1"], "move": [0], "next": "h"}
  ]
}"#;

fn workcost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workcost"))
        .args(args)
        .output()
        .unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

fn machine(dir: &Path) -> String {
    let path = dir.join("inc.json");
    std::fs::write(&path, INCREMENT).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_reports_cost_and_final_tape() {
    let dir = tempfile::tempdir().unwrap();
    let out = workcost(&["run", "--machine", &machine(dir.path()), "--input", "1,1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout);
    assert_eq!(v["status"], "halted");
    assert_eq!(v["steps"], 4);
    assert_eq!(v["tapes"][0]["cells"].as_array().unwrap().len(), 4);
    assert!(v["cost_bits"].as_f64().unwrap() > 4.0 * v["fsm_bits"].as_f64().unwrap());
}

#[test]
fn exhausted_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = workcost(&[
        "run",
        "--machine",
        &machine(dir.path()),
        "--input",
        "1 1 1",
        "--budget",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out.stdout)["status"], "budget_exceeded");
}

#[test]
fn trace_and_out_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("report.json");
    let out = workcost(&[
        "run",
        "--machine",
        &machine(dir.path()),
        "--input",
        "1,1",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let rows = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3);
    assert_eq!(json(&std::fs::read(&report).unwrap())["steps"], 3);
}

#[test]
fn errors_are_json_on_stderr() {
    let out = workcost(&["run", "--machine", "/nonexistent/machine.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out.stderr);
    assert_eq!(v["error"]["exit_code"], 1);
    assert!(out.stdout.is_empty());

    let out = workcost(&["game", "--system", "titfortat"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"]["kind"], "usage");

    let out = workcost(&["tradeoff", "--m", "8", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_machine_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"states": ["q"]}"#).unwrap();
    let out = workcost(&["run", "--machine", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tit_for_tat_game_is_deterministic() {
    let args = ["game", "--system", "titfortat", "--seed", "4", "--turns", "10"];
    let a = workcost(&args);
    let b = workcost(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a.stdout);
    assert_eq!(v["verdict"], "system_wins");
    let turns = v["turns"].as_array().unwrap();
    assert_eq!(turns.len(), 11);
    for t in &turns[..10] {
        assert_eq!(t["bits"], 76.0);
    }
}

#[test]
fn emulation_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = workcost(&["emulate", "--machine", &machine(dir.path()), "--input", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout);
    assert_eq!(v["ok"], true);
    assert_eq!(v["verification"]["direct_steps"], 3);
    assert_eq!(v["verification"]["emulated_steps"], 13);
}

#[test]
fn neural_simulation_modes_agree() {
    let run = |mode: &str| {
        json(&workcost(&["nnsim", "--seed", "3", "--ticks", "6", "--mode", mode]).stdout)["trajectory"].clone()
    };
    assert_eq!(run("direct"), run("accumulator"));
    assert_eq!(run("direct"), run("plain"));
}

#[test]
fn search_beats_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = workcost(&[
        "search",
        "--machine",
        &machine(dir.path()),
        "--reference",
        "1",
        "--target",
        "1,1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout);
    assert!(v["result"]["best"]["cost"].as_f64().unwrap() < v["result"]["reference_cost"].as_f64().unwrap());
}

#[test]
fn tradeoff_reports_unit_optimum() {
    let out = workcost(&["tradeoff", "--m", "8", "--n", "8", "--omega", "23.083"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("delta* = 1.000000"), "{text}");
}

#[test]
fn capacity_csv_for_key_cracker() {
    let out = workcost(&[
        "capacity",
        "--fixture",
        "eff_des_cracker",
        "--published-rounding",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().find(|l| l.contains(",per_key_bytes,")).unwrap();
    assert!(row.contains(",true,"), "{row}");
}
