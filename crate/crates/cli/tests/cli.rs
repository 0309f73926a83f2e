use std::process::{Command, Output};

use serde_json::Value;

fn permtwist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permtwist")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = permtwist(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn values(v: &Value, key: &str) -> Vec<String> {
    v.as_array().unwrap().iter().map(|r| r[key].as_str().unwrap().to_string()).collect()
}

#[test]
fn coeffs() {
    assert_eq!(values(&json(&["--json", "coeffs", "--k", "1", "--depth", "3"]), "value"), ["0", "0", "0"]);
    assert_eq!(values(&json(&["coeffs", "--k", "2", "--depth", "2"]), "value"), ["-1/2", "1/4"]);
    let k3 = json(&["coeffs", "--k", "3", "--depth", "4"]);
    let lib = permtwist::solve_a_coeffs(3, 4).unwrap();
    let want: Vec<String> = lib.coeffs.iter().map(permtwist::scalars::fmt_rat).collect();
    assert_eq!(values(&k3, "value"), want);
    assert_eq!(permtwist(&["coeffs", "--k", "0"]).status.code(), Some(2));
}

#[test]
fn character() {
    let untwisted = json(&["character", "(1)", "--terms", "4"]);
    let coeffs: Vec<u64> = untwisted.as_array().unwrap().iter().map(|t| t["coeff"].as_u64().unwrap()).collect();
    assert_eq!(coeffs, [1, 1, 2, 3]);
    assert_eq!(json(&["character", "(1 2)", "--c", "1"])[0]["exponent"], "1/16");
    let whole = json(&["character", "(1 2)(3)", "--terms", "5"]);
    assert_eq!(values(&whole, "exponent"), ["1/16", "9/16", "17/16", "25/16", "33/16"]);
    let coeffs: Vec<u64> = whole.as_array().unwrap().iter().map(|t| t["coeff"].as_u64().unwrap()).collect();
    // p(n) convolved with p(n) on the half-integer grid.
    assert_eq!(coeffs, [1, 1, 3, 4, 9]);
}

#[test]
fn malformed_cycle_reports_position() {
    let out = permtwist(&["character", "(1 2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position 4"));
}

#[test]
fn verify_suites() {
    for args in [
        &["verify", "--suite", "theta", "--k", "2"][..],
        &["verify", "--suite", "roundtrip", "--k", "2", "--cap", "3"],
        &["verify", "--suite", "branch-negative", "--k", "2"],
    ] {
        let out = permtwist(args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let report = json(&["--json", "verify", "--suite", "delta-calculus", "--k", "3"]);
    assert_eq!(report["suite"], "delta-calculus");
    assert!(report["items"].as_array().unwrap().iter().all(|i| i["status"] == "pass"));
    assert_eq!(permtwist(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn deterministic_reports() {
    let strip = |mut v: Value| {
        for i in v["items"].as_array_mut().unwrap() {
            i["elapsed"] = Value::Null;
        }
        v
    };
    let a = strip(json(&["--json", "verify", "--suite", "xidentities", "--k", "2"]));
    let b = strip(json(&["--json", "verify", "--suite", "xidentities", "--k", "2"]));
    assert_eq!(a, b);
}

#[test]
fn delta_and_mode() {
    let d = json(&["delta", "--k", "2", "--u", "omega"]);
    assert_eq!(d["terms"][1]["vector"]["()"], "1/32");
    let m = json(&["mode", "--k", "2", "--u", "1", "--slot", "2", "--m", "-1/2", "--cap", "2"]);
    assert_eq!(m["matrix"]["blocks"][0]["entries"][0][0], "-1/2");
    assert_eq!(permtwist(&["mode", "--k", "2", "--u", "1", "--m", "1/3"]).status.code(), Some(2));
    assert_eq!(permtwist(&["mode", "--k", "2", "--u", "x"]).status.code(), Some(2));
}
