use std::process::{Command, Output};

use serde_json::Value;
use symclone::channels::{SymChannel, SymSpace};
use symclone::linalg::c;
use symclone::symspace::SymOperator;

fn symclone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symclone")).args(args).output().expect("spawn")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn identities_pass_and_fault_is_reported() {
    let out = symclone(&["identities", "--max-M", "30"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);
    let out = symclone(&["identities", "--max-M", "10", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["first_failure"].is_object());
}

#[test]
fn decompose_examples() {
    for (d, m, k) in [("2", "1", "1"), ("3", "2", "3")] {
        let out = symclone(&["decompose", "--d", d, "--M", m, "--k", k]);
        assert_eq!(out.status.code(), Some(0));
        assert!(json(&out)["residual"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn bounds_table_has_one_row_per_m_and_monotone_min() {
    let out = symclone(&["bounds", "--d", "2", "--k", "1", "--M-range", "2:12"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 11);
    let mins: Vec<f64> = rows.iter().map(|r| r["min"].as_f64().unwrap()).collect();
    assert!(mins.windows(2).all(|w| w[1] <= w[0]));

    let out = symclone(&["bounds", "--d", "2", "--k", "1", "--M-range", "2:6", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    for row in json(&out)["rows"].as_array().unwrap() {
        assert!(row["sdp_upper"].as_f64().unwrap() <= row["min"].as_f64().unwrap() + 1e-6);
    }

    let out = symclone(&["bounds", "--d", "2", "--k", "1", "--M-range", "2:4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("M,bound1,bound2_exact,bound2_linear,clone_bound,min"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(symclone(&["bounds", "--M-range", "5:2"]).status.code(), Some(2));
    assert_eq!(symclone(&["bounds", "--d", "0", "--M-range", "1:3"]).status.code(), Some(2));
    assert_eq!(symclone(&["no-such-command"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"d\": 2, \"M\": ").unwrap();
    let out = symclone(&["definetti", bad.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn product_state_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("product.json");
    let psi = nalgebra::DVector::from_vec(vec![c(0.6), c(0.8)]);
    std::fs::write(&path, SymOperator::product_pure(&psi, 4).unwrap().to_json()).unwrap();
    let out = symclone(&["definetti", path.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = json(&out);
    assert!(cert["margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn identity_broadcast_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("identity.json");
    std::fs::write(&path, SymChannel::identity(SymSpace::new(2, 4)).to_json()).unwrap();
    let out = symclone(&["broadcast", path.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = json(&out);
    assert!(cert["distance"].as_f64().unwrap() <= 1.0);
    assert!(cert["margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn clonegap_decays() {
    let out = symclone(&["clonegap", "--d", "2", "--N", "1", "--M-range", "2:50"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["table"]["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 49);
    assert!(rows.last().unwrap()["gap"].as_f64().unwrap() < 0.01);
}

#[test]
fn capacity_report() {
    let out = symclone(&["capacity", "--d", "2", "--M", "100", "--k", "1", "--din", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out)["report"].clone();
    assert!((r["transpose_bound_log"].as_f64().unwrap() - 0.111).abs() < 1e-3);
    let out = symclone(&["capacity", "--d", "2", "--M", "3", "--k", "1", "--exact"]);
    let r = json(&out)["report"].clone();
    assert_eq!(r["continuity_omitted"], true);
    assert!(r["computed_transpose_diamond"].as_f64().unwrap() <= r["transpose_bound_log"].as_f64().unwrap() + 1e-3);
}

#[test]
fn dense_size_guard_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    let out = Command::new(env!("CARGO_BIN_EXE_symclone"))
        .args(["random-state", "--d", "2", "--M", "3", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_symclone"))
        .env("SYMCLONE_MAX_DENSE", "4")
        .args(["definetti", path.to_str().unwrap(), "--full", "--k", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn svg_output_is_a_document() {
    let out = symclone(&["bounds", "--d", "2", "--k", "1", "--M-range", "2:8", "--format", "svg"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
}
