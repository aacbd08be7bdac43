//! End-to-end tests of the `lab` binary: subcommand outputs, exit-code
//! contract, determinism, and artifact writing.

use std::path::PathBuf;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lab-cli-test-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn group_commutator_compact() {
    let out = lab(&["group", "commutator", "--g", "affine:2,0", "--h", "affine:1,1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "affine:1,1");
}

#[test]
fn group_fixed_none() {
    let out = lab(&["group", "fixed", "--g", "affine:1,3"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "none");

    let out = lab(&["group", "fixed", "--g", "affine:3,-2"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["kind"], "singleton");
    assert_eq!(report["point"], "1/1");
}

#[test]
fn group_holder_less_with_caveat_on_stderr() {
    let out = lab(&["group", "holder", "--g", "affine:1,1", "--h", "affine:1,2", "--x0", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "Less");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("one-point comparison"));
    // --assume-free silences the caveat.
    let out = lab(&[
        "group",
        "holder",
        "--g",
        "affine:1,1",
        "--h",
        "affine:1,2",
        "--x0",
        "0",
        "--assume-free",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn group_archimedean_witness() {
    let out = lab(&[
        "group",
        "archimedean",
        "--phi",
        "affine:2,0",
        "--psi",
        "affine:16,0",
        "--x0",
        "1",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "5");
}

#[test]
fn group_element_json_roundtrip() {
    let out = lab(&[
        "group",
        "compose",
        "--g",
        r#"{"kind":"power","alpha":"2/1"}"#,
        "--h",
        r#"{"kind":"power","alpha":"3/1"}"#,
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "power:6");
}

#[test]
fn predict_past_and_weak() {
    let out = lab(&[
        "predict",
        "--past",
        r#"{"breakpoints":["0/1"],"values":[0,1],"cutoff":"3/1"}"#,
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), r#"{"state":1}"#);

    let out = lab(&[
        "predict",
        "--weak",
        r#"{"breakpoints":["0/1"],"values":[0,1],"hole":"0/1"}"#,
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), r#"{"state":0}"#);
}

#[test]
fn predict_op_envelopes() {
    let out = lab(&[
        "predict",
        "--op",
        r#"{"op":"predict","past":{"breakpoints":[],"values":[2],"cutoff":"0/1"}}"#,
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), r#"{"state":2}"#);

    let out = lab(&[
        "predict",
        "--op",
        r#"{"op":"badset","total":{"breakpoints":["0/1","2/1"],"values":[0,1,2]},"probes":["1/2","-5/1"]}"#,
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["certified"], serde_json::json!(["0/1", "2/1"]));
    assert_eq!(v["ok_probes"], 2);
}

#[test]
fn exit_code_contract() {
    // Malformed JSON input: exit 2 with a diagnostic.
    let out = lab(&["predict", "--past", "{broken"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // Structurally invalid input (unsorted breakpoints): exit 2 too.
    let out = lab(&[
        "predict",
        "--past",
        r#"{"breakpoints":["5/1","1/1"],"values":[0,1,0],"cutoff":"9/1"}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));

    // Unknown subcommand: clap usage error, exit 2.
    let out = lab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // Passing suite: exit 0.
    let out = lab(&["verify", "anonymity", "--trials", "25", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn alphabet_flag_names_and_json() {
    let out = lab(&[
        "predict",
        "--alphabet",
        "up,down",
        "--past",
        r#"{"breakpoints":["0/1"],"values":[0,1],"cutoff":"3/1"}"#,
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), r#"{"state":1}"#);

    // Out-of-range state against a declared two-letter alphabet: exit 2.
    let out = lab(&[
        "predict",
        "--alphabet",
        r#"{"alphabet":["a","b"]}"#,
        "--past",
        r#"{"breakpoints":[],"values":[3],"cutoff":"0/1"}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn decimal_literals_parse_exactly() {
    let out = lab(&[
        "group", "holder", "--g", "affine:1,0.5", "--h", "affine:1,1/2", "--x0", "0",
        "--assume-free",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "Equal");
}

#[test]
fn verify_badset_single_function() {
    let out = lab(&[
        "verify",
        "badset",
        "--total",
        r#"{"breakpoints":["0/1","2/1"],"values":[0,1,2]}"#,
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["certified"], serde_json::json!(["0/1", "2/1"]));
}

#[test]
fn verify_suite_reports_are_deterministic() {
    let run = || {
        stdout(&lab(&[
            "verify",
            "anonymity",
            "--trials",
            "40",
            "--seed",
            "11",
        ]))
    };
    assert_eq!(run(), run());
}

#[test]
fn lab_seed_env_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(["verify", "anonymity", "--trials", "10", "--seed", "3"])
        .env("LAB_SEED", "99")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["seed"], 99);
}

#[test]
fn verify_promotion_scenarios() {
    let out = lab(&["verify", "promotion"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn diffeo_build_writes_artifacts() {
    let dir = tmp_dir("build");
    let json_path = dir.join("assembly.json");
    let csv_path = dir.join("curve.csv");
    let out = lab(&[
        "diffeo",
        "build",
        "--target",
        "1,1",
        "--depth",
        "16",
        "--out-json",
        json_path.to_str().unwrap(),
        "--out-csv",
        csv_path.to_str().unwrap(),
        "--probes",
        "64",
    ]);
    assert!(out.status.success());
    let assembly: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(assembly["depth"], 16);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("x,G(x),G'(x),piece-id,zone"));
    assert!(csv.lines().count() >= 65);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn diffeo_certify_and_witness() {
    let out = lab(&["diffeo", "certify", "--target", "1,1", "--depth", "20", "--orders", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["passed"], true);

    // Depth too small for the default scales: inconclusive, exit 1, with a
    // suggestion to rebuild deeper.
    let out = lab(&["diffeo", "certify", "--target", "1,1", "--depth", "8"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["conclusive"], false);
    assert!(v["suggestion"]
        .as_str()
        .unwrap()
        .contains("larger depth"));

    let out = lab(&[
        "diffeo", "witness", "--target", "1,1", "--depth", "16", "--point", "3/5",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["outcome"], "member");
    assert_eq!(v["member"]["spec"]["gamma"], "31/64");
}

#[test]
fn diffeo_blocking_demo() {
    let out = lab(&[
        "diffeo", "blocking", "--x", "0", "--y", "0", "--depth", "16", "--samples", "50",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["g_at_target_exact"], true);
    assert_eq!(v["all_witnesses_succeeded"], true);
    assert_eq!(v["chain"].as_array().unwrap().len(), 6);
}

#[test]
fn equiv_explore_files() {
    let dir = tmp_dir("equiv");
    let family = dir.join("family.json");
    let points = dir.join("points.json");
    std::fs::write(
        &family,
        r#"{"members":[{"kind":"line","slope":"2/1","x0":"0/1","y0":"0/1"}]}"#,
    )
    .unwrap();
    std::fs::write(&points, r#"["1/4","1/2","1","3"]"#).unwrap();
    let out = lab(&[
        "equiv",
        "explore",
        "--family",
        family.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let classes = v["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    // The doubling orbit connects 1/4 ~ 1/2 ~ 1 with replayed witnesses.
    let big = classes
        .iter()
        .find(|c| c["points"].as_array().unwrap().len() == 3)
        .unwrap();
    for w in big["witnesses"].as_array().unwrap() {
        assert_eq!(w["replayed"], true);
    }
    std::fs::remove_dir_all(dir).ok();
}
