use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn bdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdlab")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn classify_identity_is_not_a_dyad() {
    let o = bdlab(&["classify", "--matrix", "[[1,0],[0,1]]"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["tag"], "NotDyad");
    let o = bdlab(&["classify", "--matrix", "[[0,1],[1,0]]"]);
    let v = json(&o);
    assert_eq!(v["tag"], "OppositeSignDyad");
    assert!(v["reconstruction_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn evaluate_staircase() {
    let f = fixture("staircase.json");
    let o = bdlab(&["evaluate", "--field", f.to_str().unwrap(), "--integrand", "norm(A)", "--no-boundary"]);
    assert_eq!(o.status.code(), Some(0));
    // 9 significant digits of 2√2
    assert_eq!(json(&o)["total"].as_f64().unwrap(), 2.82842712);
}

#[test]
fn qc_test_flags_negative_norm() {
    let o = bdlab(&["qc-test", "--integrand", "-norm(A)", "--at", "[[0,0],[0,0]]", "--grid", "17", "--iters", "50", "--starts", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["verdict"], "violation");
    let o = bdlab(&["qc-test", "--integrand", "norm(A)", "--at", "[[0.3,0.1],[0.1,0]]", "--grid", "9", "--iters", "20", "--starts", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "none");
}

#[test]
fn input_errors_exit_one() {
    for args in [
        vec!["frobnicate"],
        vec!["classify", "--matrix", "[[1,0],[0"],
        vec!["evaluate", "--field", fixture("staircase.json").to_str().unwrap(), "--integrand", "norm(A"],
        vec!["evaluate", "--field", "/nonexistent.json", "--integrand", "norm(A)"],
        vec!["classify", "--matrix", "[[1,2],[3,4]]"],
    ] {
        let o = bdlab(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.trim().is_empty(), "{args:?}");
    }
}

#[test]
fn help_names_the_construct() {
    let o = bdlab(&["jensen", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Young measure"));
    let o = bdlab(&["rigidity", "--help"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("differential inclusion"));
}

#[test]
fn lsc_demo_writes_reports_deterministically() {
    let seq = fixture("laminate_sequence.json");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = bdlab(&["lsc-demo", "--sequence", seq.to_str().unwrap(), "--integrand", "norm(A)", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(json(&o)["verdict"], "PASS");
    }
    let csv = fs::read_to_string(dirs[0].path().join("lsc.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,F_uj,area_uj"));
    assert_eq!(lines.next(), Some("2,0.707106781,1.22474487"));
    for f in ["lsc.json", "lsc.csv"] {
        assert_eq!(fs::read(dirs[0].path().join(f)).unwrap(), fs::read(dirs[1].path().join(f)).unwrap());
    }
}

#[test]
fn rigidity_cases() {
    let o = bdlab(&["rigidity", "--matrix", "[[1,0],[0,1]]", "--g", "x[0]^2", "--grid", "17"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["verdict"], "NOT_SOLVABLE");
    let o = bdlab(&["rigidity", "--matrix", "[[1,0],[0,1]]", "--g", "x[0]^2 - x[1]^2", "--grid", "17"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "SOLVABLE");
    let d = tempfile::tempdir().unwrap();
    let o = bdlab(&["rigidity", "--matrix", "[[1,0],[0,0]]", "--p", "12*t^2", "--grid", "17", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["case"]["tag"], "Degenerate");
    let field: Value = serde_json::from_str(&fs::read_to_string(d.path().join("rigidity_field.json")).unwrap()).unwrap();
    assert_eq!(field["values"].as_array().unwrap().len(), 2 * 17 * 17);
    // the opposite-sign residual is pure discretization error, second order in h
    let res: Vec<f64> = ["17", "33"]
        .iter()
        .map(|n| {
            let o = bdlab(&["rigidity", "--matrix", "[[1,0],[0,-4]]", "--h1", "sin(t)", "--h2", "t^2", "--grid", n]);
            assert_eq!(o.status.code(), Some(0));
            json(&o)["residual"].as_f64().unwrap()
        })
        .collect();
    assert!(res[0] / res[1] > 3.5, "{res:?}");
}

#[test]
fn jensen_staircase_and_doubling() {
    let f = fixture("staircase.json");
    let o = bdlab(&["jensen", "--field", f.to_str().unwrap(), "--integrand", "sqrt(1 + normsq(A))"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], "HOLDS");
    assert_eq!(v["sites"].as_array().unwrap().len(), 81 + 2);
    let o = bdlab(&["doubling", "--field", f.to_str().unwrap(), "--x0", "0.5,0", "--t", "3", "--radii", "0.1,0.05"]);
    assert_eq!(o.status.code(), Some(0));
    for row in json(&o)["rows"].as_array().unwrap() {
        assert_eq!(row["ratio"].as_f64().unwrap(), 3.0);
    }
}

#[test]
fn staircase_halves_distance() {
    let f = fixture("staircase_cell.json");
    let o = bdlab(&["staircase", "--field", f.to_str().unwrap(), "--q1", "1", "--q2", "1", "--n", "1,2,4"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    let d: Vec<f64> = rows.iter().map(|r| r["dist_to_affine"].as_f64().unwrap()).collect();
    assert!((d[0] / d[1] - 2.0).abs() < 0.4 && (d[1] / d[2] - 2.0).abs() < 0.4, "{d:?}");
    assert!(rows.iter().all(|r| r["gluing_mass"].as_f64().unwrap() < 1e-12));
}

#[test]
fn strict_demo_and_minimize() {
    let f = fixture("staircase.json");
    let o = bdlab(&["strict-demo", "--field", f.to_str().unwrap(), "--integrand", "norm(A)", "--deltas", "0.8,0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // |A| is 1-homogeneous, so mollification does not change F
    for row in json(&o)["trajectory"].as_array().unwrap() {
        assert!(row["f_gap"].as_f64().unwrap() < 1e-6);
    }
    let o = bdlab(&["minimize", "--integrand", "norm(A)", "--grid", "5", "--dirichlet", "x[0];0", "--iters", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&o)["total"].as_f64().unwrap().is_finite());
}
