//! End-to-end tests of the `regldp` binary: artifact formats, exit codes,
//! determinism modulo the header timestamp.

use std::process::{Command, Output};

fn regldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regldp"))
        .args(args)
        .env_remove("REGLDP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

/// Header line with the volatile timestamp zeroed out.
fn normalize_header(line: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
    v["timestamp"] = serde_json::json!(0);
    v.to_string()
}

#[test]
fn types_lists_the_four_small_types() {
    let out = regldp(&["types", "--n", "2", "--d", "2", "--q", "2"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    // one header plus four type objects
    assert_eq!(lines.len(), 5);
    let header: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(header["command"], "types");
    assert_eq!(header["config"]["count"], 4);
    for line in &lines[1..] {
        let t: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(t["n"], 2);
        assert_eq!(t["q"], 2);
    }
}

#[test]
fn exact_prints_the_hand_checked_rational() {
    // two opposite-spin vertices joined by two parallel edges have
    // probability 1/3 under uniform mu at n=2, d=2
    let t = r#"{"n":2,"d":2,"q":2,"spin_counts":[1,1],"bond_counts":[[0,2],[2,0]]}"#;
    let out = regldp(&["exact", "--type", t, "--mu", "1/2,1/2"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let body: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    assert_eq!(body["probability"], "1/3");
}

#[test]
fn rate_at_the_mean_is_zero() {
    let out = regldp(&[
        "rate",
        "--rho",
        "0.5,0.5",
        "--nu",
        "0.25,0.25,0.25,0.25",
        "--mu",
        "0.5,0.5",
        "--d",
        "3",
    ]);
    assert!(out.status.success());
    let val: f64 = stdout_lines(&out)[0].parse().unwrap();
    assert!(val.abs() <= 1e-12);
}

#[test]
fn sample_output_is_deterministic_modulo_timestamp() {
    let args = [
        "sample", "--n", "10", "--d", "3", "--mu", "0.5,0.5", "--samples", "5", "--seed", "9",
    ];
    let a = regldp(&args);
    let b = regldp(&args);
    assert!(a.status.success());
    let la = stdout_lines(&a);
    let lb = stdout_lines(&b);
    assert_eq!(la.len(), lb.len());
    assert_eq!(normalize_header(&la[0]), normalize_header(&lb[0]));
    assert_eq!(la[1..], lb[1..]);
}

#[test]
fn seed_env_var_is_honored_when_flag_absent() {
    let args = ["sample", "--n", "8", "--d", "2", "--mu", "0.5,0.5", "--samples", "3"];
    let via_env = Command::new(env!("CARGO_BIN_EXE_regldp"))
        .args(args)
        .env("REGLDP_SEED", "123")
        .output()
        .unwrap();
    let via_flag = regldp(&[
        "sample", "--n", "8", "--d", "2", "--mu", "0.5,0.5", "--samples", "3", "--seed", "123",
    ]);
    assert_eq!(stdout_lines(&via_env)[1..], stdout_lines(&via_flag)[1..]);
}

#[test]
fn minimize_round_trips_through_json() {
    let event = r#"[{"target":"rho","coeffs":[1.0,0.0],"bound":0.75,"sense":"ge"}]"#;
    let out = regldp(&["minimize", "--event", event, "--mu", "0.5,0.5", "--d", "3"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let body: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    let value = body["value"].as_f64().unwrap();
    assert!((value - 0.130812035941137).abs() < 1e-9);
    assert!(body["kkt_residual"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn verify_emits_the_fixed_csv_schema() {
    let event = r#"[{"target":"rho","coeffs":[1.0,0.0],"bound":0.6,"sense":"ge"}]"#;
    let out = regldp(&[
        "verify", "--event", event, "--mu", "0.5,0.5", "--d", "2", "--n-grid", "10,20",
        "--samples", "2000", "--seed", "4",
    ]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert!(lines[0].starts_with("# {"));
    assert_eq!(lines[1], "n,p_hat,ci_lo,ci_hi,mc_rate,lattice_inf,continuum_inf");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("10,"));
    assert!(lines[3].starts_with("20,"));
}

#[test]
fn output_flag_writes_the_artifact_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("types.jsonl");
    let out = regldp(&[
        "types", "--n", "2", "--d", "2", "--q", "2", "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn usage_errors_exit_with_code_2() {
    let out = regldp(&["rate", "--rho", "0.5,oops", "--nu", "x", "--mu", "0.5,0.5", "--d", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_event_exits_with_code_3() {
    let event = r#"[{"target":"rho","coeffs":[1.0,0.0],"bound":2.0,"sense":"ge"}]"#;
    let out = regldp(&["minimize", "--event", event, "--mu", "0.5,0.5", "--d", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_scale_guard_exits_with_code_4() {
    let out = regldp(&["oracle", "--n", "40", "--d", "2", "--mu", "1/2,1/2"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn rejection_cap_exits_with_code_5() {
    // d = n makes a simple graph impossible (needs n-1 distinct neighbors)
    let out = regldp(&[
        "sample", "--n", "2", "--d", "2", "--mu", "1", "--simple", "--max-attempts", "50",
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn oracle_json_is_exact_and_csv_is_float() {
    let out = regldp(&["oracle", "--n", "2", "--d", "2", "--mu", "1/2,1/2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"1/3\""));
    assert!(text.contains("\"1/6\""));

    let out = regldp(&["oracle", "--n", "2", "--d", "2", "--mu", "1/2,1/2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].starts_with("n,d,q,"));
    assert_eq!(lines.len(), 6); // header comment, column row, four types
    assert!(text.contains("3.333333333333e-1"));
    assert!(text.contains("1.666666666667e-1"));
}
