use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ttk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttk"))
        .args(args)
        .env_remove("TTK_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn connect_rank_one_files_exits_zero() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", r#"{"shape":[2,2,2],"field":"real","data":[1,2,2,4,3,6,6,12]}"#);
    let b = write(dir.path(), "b.json", r#"{"shape":[2,2,2],"field":"real","data":[-1,1,0,0,-2,2,0,0]}"#);
    let path = dir.path().join("path.json");
    let dump = dir.path().join("samples.csv");
    let out = ttk(&[
        "connect",
        "--stratum",
        "rank:r=1;shape=2,2,2;field=real",
        s(&a),
        s(&b),
        "--out",
        s(&path),
        "--dump",
        s(&dump),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["pass"], true);
    assert!(summary["endpoint_error"].as_f64().unwrap() <= 1e-10);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(saved["segments"].as_array().is_some_and(|s| !s.is_empty()));
    let csv = std::fs::read_to_string(&dump).unwrap();
    assert!(csv.starts_with("t,verdict,mrank,min_margin,label"));
}

#[test]
fn opposite_determinants_exit_two() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", r#"{"shape":[2,2],"field":"real","data":[1,0,0,1]}"#);
    let b = write(dir.path(), "b.json", r#"{"shape":[2,2],"field":"real","data":[0,1,1,0]}"#);
    let out = ttk(&["connect", "--stratum", "mrank:r=2,2;shape=2,2;field=real", s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["outcome"], "different-components");
}

#[test]
fn classify_reference_tensor_gives_sign_triple() {
    let dir = TempDir::new().unwrap();
    let b = write(dir.path(), "B.json", r#"{"shape":[2,2,2],"field":"real","data":[1,0,0,-1,0,1,1,0]}"#);
    let out = ttk(&["classify", "--stratum", "brank:r=3;shape=2,2,2;field=real", s(&b)]);
    assert_eq!(out.status.code(), Some(0));
    let label = stdout_json(&out);
    assert_eq!(label["kind"], "SignTriple");
    assert_eq!(label["value"]["s12"], "+");
}

#[test]
fn rank_reports_hyperdeterminant_certificate() {
    let dir = TempDir::new().unwrap();
    let b = write(dir.path(), "B.json", r#"{"shape":[2,2,2],"field":"real","data":[1,0,0,-1,0,1,1,0]}"#);
    let out = ttk(&["rank", s(&b)]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["mrank"], serde_json::json!([2, 2, 2]));
    assert_eq!(r["certificate"]["class"], "BorderRank3");
    assert_eq!(r["certificate"]["hyperdet"], -4.0);
}

#[test]
fn even_symmetric_census_finds_three_labels() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let out = ttk(&[
        "census",
        "--stratum",
        "sym-rank:d=4;n=4;r=2;field=real",
        "--trials",
        "300",
        "--seed",
        "7",
        "--out",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(&report).unwrap();
    let r: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(r["labels"].as_array().unwrap().len(), 3);
    assert_eq!(r["verdict"], "consistent");

    let again = Command::new(env!("CARGO_BIN_EXE_ttk"))
        .args(["census", "--stratum", "sym-rank:d=4;n=4;r=2;field=real", "--trials", "300"])
        .args(["--out", s(&report)])
        .env("TTK_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(std::fs::read(&report).unwrap(), first);
}

#[test]
fn malformed_spec_is_diagnosed_without_panic() {
    let dir = TempDir::new().unwrap();
    let b = write(dir.path(), "B.json", r#"{"shape":[2,2,2],"field":"real","data":[1,0,0,-1,0,1,1,0]}"#);
    let out = ttk(&["classify", "--stratum", "brank:r=3;shap=2,2,2", s(&b)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("column 11"), "{err}");
    assert!(err.contains("shap"), "{err}");
    assert!(!err.contains("panicked") && !err.contains("backtrace"), "{err}");
}

#[test]
fn malformed_tensor_file_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"shape\":[2,2],\n\"field\":\"real\",\"data\":[1,0,0,]}");
    let out = ttk(&["rank", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");
}

#[test]
fn monodromy_probe_reports_flip() {
    let out = ttk(&["probe-monodromy", "--r", "6,2,3", "--n", "6,3,3", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["flip_observed"], true);
}

#[test]
fn quick_suite_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let p1 = dir.path().join("one.json");
    let p2 = dir.path().join("two.json");
    for p in [&p1, &p2] {
        let out = ttk(&["--threads", "2", "verify-suite", "--quick", "--out", s(p)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&p1).unwrap();
    assert_eq!(a, std::fs::read(&p2).unwrap());
    let r: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(r["passed"], r["total"]);
}
