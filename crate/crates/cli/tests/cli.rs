use std::process::{Command, Output};

use serde_json::Value;

fn arakelov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arakelov")).args(args).env_remove("ARAKELOV_SEED").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn quick_suite_passes() {
    let out = arakelov(&["suite", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let doc = json(&out);
    assert_eq!(doc["result"]["all_pass"], true);
    assert!(doc["result"]["checks"].as_array().unwrap().len() >= 10);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall_time_s"));
}

#[test]
fn identical_segments_have_zero_energy() {
    let out = arakelov(&["--place", "3", "energy", "ua", "0:0", "0:1", "0:0", "0:1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["result"]["closed"].as_f64(), Some(0.0));
    assert_eq!(doc["result"]["valid_bounds_hold"], true);
}

#[test]
fn repeated_branch_point_is_degenerate() {
    let out = arakelov(&["adelic", "energy", "--a", "1,1,2", "--b", "3,4,5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "DegenerateConfig");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(arakelov(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(arakelov(&["places", "eval"]).status.code(), Some(2));
    assert_eq!(arakelov(&["--seed", "x", "suite"]).status.code(), Some(2));
}

#[test]
fn domain_error_codes_surface() {
    let cases: [(&[&str], &str); 5] = [
        (&["--place", "4", "places", "eval", "3"], "NotPrime"),
        (&["places", "bound", "1/2", "0"], "ZeroInput"),
        (&["places", "eval", "1/x"], "Parse"),
        (&["--place", "3", "energy", "ua", "0", "0:1", "0:0", "0:1"], "Type1Endpoint"),
        (&["adelic", "energy", "--config", "/nonexistent/config.json"], "Io"),
    ];
    for (args, code) in cases {
        let out = arakelov(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(json(&out)["error"]["code"], code, "{args:?}");
    }
}

#[test]
fn output_is_reproducible() {
    let args = ["adelic", "energy", "--a", "1,2,3", "--b", "4,5,7", "--quick"];
    let (x, y) = (arakelov(&args), arakelov(&args));
    assert_eq!(x.status.code(), Some(0));
    assert_eq!(x.stdout, y.stdout);
    let doc = json(&x);
    assert_eq!(doc["manifest"]["seed"], 7);
    assert_eq!(doc["manifest"]["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_variable_overrides_flag() {
    let args = ["--seed", "3", "energy", "cloud", "--lambda-a", "2", "--lambda-b", "3", "--quick"];
    let plain = arakelov(&args);
    let env = Command::new(env!("CARGO_BIN_EXE_arakelov")).args(args).env("ARAKELOV_SEED", "11").output().unwrap();
    assert_eq!(json(&plain)["manifest"]["seed"], 3);
    assert_eq!(json(&env)["manifest"]["seed"], 11);
    assert_ne!(json(&plain)["result"], json(&env)["result"]);
    let bad = Command::new(env!("CARGO_BIN_EXE_arakelov")).args(args).env("ARAKELOV_SEED", "-1").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_file_and_out_flag() {
    let dir = std::env::temp_dir().join(format!("arakelov-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, r#"{"a": ["1", "2", "3"], "b": ["4", "5", "7"]}"#).unwrap();
    let report = dir.join("report.json");
    let out =
        arakelov(&["adelic", "inequalities", "--config", cfg.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["result"]["all_hold"], true);
    let inline = json(&arakelov(&["adelic", "inequalities", "--a", "1,2,3", "--b", "4,5,7"]));
    assert_eq!(doc["result"], inline["result"]);
    assert_ne!(doc["manifest"]["input_digest"], inline["manifest"]["input_digest"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn branch_points_match_at_level_zero() {
    let doc = json(&arakelov(&["adelic", "bft", "--lambda-a", "2", "--lambda-b", "3", "--level", "0"]));
    assert_eq!(doc["result"]["count"], 3);
}
