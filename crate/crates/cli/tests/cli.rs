use std::path::{Path, PathBuf};
use std::process::Command;

use bfstab_cli::report::Report;
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    json: Option<Value>,
    stdout: String,
}

fn bfstab(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_bfstab"))
        .args(args)
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    Run {
        code: out.status.code().unwrap(),
        json: serde_json::from_str(&stdout).ok(),
        stdout,
    }
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn make(dir: &Path, kind: &str, k: &str) -> PathBuf {
    let r = bfstab(&["make", kind, "--k", k]);
    assert_eq!(r.code, 0, "make {kind} {k}");
    write(dir, &format!("{kind}.json"), &r.json.unwrap())
}

#[test]
fn make_identity_312() {
    let r = bfstab(&["make", "identity", "--k", "3,1,2"]);
    assert_eq!(r.code, 0);
    let v = r.json.unwrap();
    assert_eq!(v["dims"], serde_json::json!([4, 2, 3]));
    assert_eq!(v["field"], "rational");
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 24);
    assert_eq!(entries.iter().filter(|e| *e == "1/1").count(), 6);
    assert_eq!(v["expected"]["class"]["value"], "SL2");
}

#[test]
fn classify_identity() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "identity", "3,1,2");
    let r = bfstab(&["classify", f.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    let v = r.json.unwrap();
    assert_eq!(v["dim"], 3);
    assert_eq!(v["class"], "SL2");
}

#[test]
fn zero_slice_is_exactly_degenerate() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "zero_slice", "3,1,2");
    let r = bfstab(&["nondegenerate", f.to_str().unwrap(), "--method", "exact"]);
    assert_eq!(r.code, 0);
    let v = r.json.unwrap();
    assert_eq!(v["status"], "DegenerateExact");
    assert_eq!(v["det"], "0/1");
    // Degenerate input violates the precondition of classify.
    assert_eq!(bfstab(&["classify", f.to_str().unwrap()]).code, 3);
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"dims":[3,2,2],"field":"rational","entries":["1/1"]}"#,
    )
    .unwrap();
    assert_eq!(bfstab(&["classify", bad.to_str().unwrap()]).code, 2);
    assert_eq!(
        bfstab(&[
            "classify",
            dir.path().join("missing.json").to_str().unwrap()
        ])
        .code,
        2
    );
    assert_eq!(bfstab(&["make", "identity", "--k", "3,1,1"]).code, 2);
    assert_eq!(bfstab(&["make", "no_such_kind", "--k", "2,1,1"]).code, 2);
    let f = make(dir.path(), "identity", "2,1,1");
    assert_eq!(
        bfstab(&["jumping", f.to_str().unwrap(), "--mode", "weak"]).code,
        2
    );
    assert_eq!(bfstab(&["frobnicate"]).code, 2);
}

#[test]
fn act_with_an_embedded_sl2_element_fixes_the_identity() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "identity", "2,1,1");
    // σ(g) for g = [[1,1],[0,1]]: ρ_2(g) on slot 0, ρ_1(g^{-1})^T on the others.
    let g = serde_json::json!({
        "dims": [3, 2, 2],
        "field": "rational",
        "matrices": [
            ["1/1", "1/1", "1/1", "0/1", "1/1", "2/1", "0/1", "0/1", "1/1"],
            ["1/1", "0/1", "-1/1", "1/1"],
            ["1/1", "0/1", "-1/1", "1/1"]
        ]
    });
    let gf = write(dir.path(), "g.json", &g);
    let r = bfstab(&["act", f.to_str().unwrap(), "--group", gf.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    let original: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    assert_eq!(r.json.unwrap()["entries"], original["entries"]);
}

#[test]
fn transform_identity_312_at_slot_2() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "identity", "3,1,2");
    let r = bfstab(&[
        "transform",
        f.to_str().unwrap(),
        "--xi",
        "1,1,1,1",
        "--slot",
        "2",
    ]);
    assert_eq!(r.code, 0);
    let v = r.json.unwrap();
    assert_eq!(v["dims"], serde_json::json!([3, 2, 2]));
    let out = write(dir.path(), "t.json", &v);
    let c = bfstab(&["classify", out.to_str().unwrap()]).json.unwrap();
    assert_eq!(c["class"], "SL2");
    // A covector that is not jumping is a precondition failure.
    assert_eq!(
        bfstab(&[
            "transform",
            f.to_str().unwrap(),
            "--xi",
            "1,0,0,1",
            "--slot",
            "2"
        ])
        .code,
        3
    );
}

#[test]
fn jumping_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "random", "2,1,1");
    let args = [
        "jumping",
        f.to_str().unwrap(),
        "--mode",
        "strong",
        "--restarts",
        "32",
        "--seed",
        "11",
    ];
    let a = bfstab(&args);
    let b = bfstab(&args);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn report_round_trips_and_is_consistent() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "vandermonde", "2,1,1");
    let r = bfstab(&[
        "report",
        f.to_str().unwrap(),
        "--restarts",
        "32",
        "--seed",
        "3",
    ]);
    assert_eq!(r.code, 0);
    let v = r.json.unwrap();
    let parsed: Report = serde_json::from_value(v.clone()).unwrap();
    let again: Report = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
    assert_eq!(parsed, again);
    assert_eq!(serde_json::to_value(&again).unwrap(), v);
    assert_eq!(parsed.consistency.status, "consistent");
    assert_eq!(parsed.stabilizer.unwrap().class, "SL2");
    assert_eq!(parsed.input.sha256.len(), 64);
    assert_eq!(parsed.jumping.len(), 3);
}

#[test]
fn report_on_degenerate_input_keeps_the_consistency_field() {
    let dir = TempDir::new().unwrap();
    let f = make(dir.path(), "zero_slice", "2,1,1");
    let r = bfstab(&["report", f.to_str().unwrap(), "--restarts", "16"]);
    assert_eq!(r.code, 0);
    let v = r.json.unwrap();
    assert!(v["stabilizer"].is_null());
    assert_eq!(v["consistency"]["applicable"], false);
    assert_eq!(v["consistency"]["status"], "consistent");
}
