use std::path::Path;
use std::process::{Command, Output};

use qsignal::choi::ChannelDescriptor;
use qsignal::process::cause_mixture;
use qsignal::process::MixtureKind;
use qsignal::tensor::{LabeledOperator, Wire};
use serde_json::Value;

fn qsignal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsignal")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn write_op(dir: &Path, name: &str, op: &LabeledOperator) -> String {
    let path = dir.join(name);
    op.write_json(&path).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn identity_channel_signals_two_bits() {
    let dir = tempfile::tempdir().unwrap();
    let id = ChannelDescriptor::identity(Wire::new("A", 2), Wire::new("B", 2)).unwrap();
    let path = write_op(dir.path(), "id.json", id.op());
    let out = qsignal(&["signalling", "--channel", &path]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&out)["s_value"].as_f64().unwrap();
    assert!((s - 2.0).abs() <= 1e-6);

    let out = qsignal(&["exclusion", "--op", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["p_value"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn invalid_channel_exits_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let id = ChannelDescriptor::identity(Wire::new("A", 2), Wire::new("B", 2)).unwrap();
    let path = write_op(dir.path(), "bad.json", &id.op().scale(2.0));
    let out = qsignal(&["signalling", "--channel", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "validation_failed");
}

#[test]
fn garbage_comb_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let op = LabeledOperator::identity(vec![Wire::new("A", 2), Wire::new("B", 2)]).unwrap().scale(3.0);
    let path = write_op(dir.path(), "comb.json", &op);
    let pairs = dir.path().join("pairs.json");
    std::fs::write(&pairs, r#"{"pairs":[{"out":"A"},{"in":"B"}]}"#).unwrap();
    let out = qsignal(&["comb-validate", "--op", &path, "--pairs", pairs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "validation_failed");
    assert_eq!(v["report"]["valid"], false);
    assert_eq!(v["report"]["first_violated_level"], 1);
}

#[test]
fn process_matrix_validation() {
    let dir = tempfile::tempdir().unwrap();
    let dc = cause_mixture(0.0, MixtureKind::Incoherent).unwrap();
    let good = write_op(dir.path(), "dc.json", dc.op());
    let out = qsignal(&["pm-validate", "--op", &good]);
    assert_eq!(out.status.code(), Some(0));

    let bad = write_op(dir.path(), "bad.json", &dc.op().scale(0.5));
    let out = qsignal(&["pm-validate", "--op", &bad]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thresholds_report() {
    let out = qsignal(&["pc-thresholds", "--grid", "800"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let td = v["td"].as_f64().unwrap();
    assert!((td - (std::f64::consts::PI / 16.0).cosh()).abs() <= 1e-3);
    assert!((v["p_div"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
}

#[test]
fn scans_emit_csv() {
    let out = qsignal(&["pc-scan", "--model", "kappa", "--param", "kappa=2", "--tmax", "4", "--grid", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,G,H,Gamma_z,s_bits,p_value,backflow_lhs"));
    assert_eq!(text.lines().count(), 10);

    let out = qsignal(&["jc-scan", "--grid", "6", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("s,t,witness"));
    assert_eq!(text.lines().count(), 1 + 21);
}

#[test]
fn unknown_model_parameter_is_rejected() {
    let out = qsignal(&["pc-scan", "--model", "kappa", "--param", "lambda=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn randomized_checks_are_seeded() {
    let a = qsignal(&["dpi-check", "--trials", "5", "--seed", "7"]);
    let b = qsignal(&["dpi-check", "--trials", "5", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let out = qsignal(&["causal-loop", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(0));
}
