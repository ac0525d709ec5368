use std::path::Path;
use std::process::{Command, Output};

use attonet_core::arch::TensorShape;
use attonet_core::engine::io::save_tensor;
use attonet_core::engine::Tensor;

fn attonet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attonet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_then_analyze_d() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("d.json");
    assert!(attonet(&["build", "--network", "attonet-d", "--out", path(&spec)])
        .status
        .success());
    let o = attonet(&["analyze", path(&spec), "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let params = report["total_params"].as_u64().unwrap() as f64;
    assert!((params / 0.32e6 - 1.0).abs() <= 0.05);

    let text = stdout(&attonet(&["analyze", path(&spec), "--input", "224"]));
    assert!(text.contains(&format!("total params     {}", params as u64)), "{text}");
    assert!(text.contains("(0.3 M)"));
}

#[test]
fn build_is_byte_stable() {
    let a = attonet(&["build", "--network", "attonet-b"]);
    let b = attonet(&["build", "--network", "attonet-b"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn score_prints_two_decimals() {
    let o = attonet(&[
        "score",
        "--accuracy",
        "65.00",
        "--params",
        "1320000",
        "--macs",
        "140100000",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "79.85");
}

#[test]
fn analyze_feeds_score() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("a.json");
    attonet(&["build", "--network", "attonet-a", "--out", path(&spec)]);
    let report: serde_json::Value =
        serde_json::from_str(&stdout(&attonet(&["analyze", path(&spec), "--json"]))).unwrap();
    let o = attonet(&[
        "score",
        "--accuracy",
        "73",
        "--params",
        &report["total_params"].to_string(),
        "--macs",
        &report["total_mult_adds"].to_string(),
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["netscore"].as_f64().unwrap().is_finite());
}

#[test]
fn infer_zero_input() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("d.json");
    let input = dir.path().join("zeros.tensor");
    attonet(&["build", "--network", "attonet-d", "--out", path(&spec)]);
    save_tensor(&input, &Tensor::zeros(TensorShape::new(3, 224, 224))).unwrap();
    let o = attonet(&["infer", path(&spec), "--random-seed", "1", "--input", path(&input)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let probs: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(probs.len(), 51);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-5);
}

#[test]
fn exit_codes() {
    assert_eq!(
        attonet(&["score", "--accuracy", "70", "--params", "1", "--macs", "1", "--nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(attonet(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        attonet(&["score", "--accuracy", "70", "--params", "0", "--macs", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(attonet(&["build", "--network", "attonet-z"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    let mut v: serde_json::Value =
        serde_json::from_str(&stdout(&attonet(&["build", "--network", "attonet-a"]))).unwrap();
    v["modules"][0]["shortcut"]["out"] = serde_json::json!(100);
    std::fs::write(&spec, v.to_string()).unwrap();
    let o = attonet(&["analyze", path(&spec)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("residual"));
}

#[test]
fn explore_writes_log_and_family() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("a.json");
    let out = dir.path().join("family");
    attonet(&["build", "--network", "attonet-a", "--out", path(&spec)]);
    let args = [
        "explore",
        "--base",
        path(&spec),
        "--generations",
        "20",
        "--seeds",
        "16",
        "--rng",
        "7",
        "--evaluator",
        "synthetic",
        "--family",
        "4",
        "--out-dir",
        path(&out),
    ];
    let o = attonet(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 20);
    for key in [
        "generation",
        "best_netscore",
        "best_params",
        "best_mult_adds",
        "feasible_count",
        "spec_digest",
    ] {
        assert!(lines[0].get(key).is_some(), "{key}");
    }
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 4);
    assert_eq!(attonet(&args).stdout, o.stdout);
}

#[cfg(unix)]
#[test]
fn explore_with_failing_command_evaluator() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("d.json");
    attonet(&["build", "--network", "attonet-d", "--out", path(&spec)]);
    let script = dir.path().join("eval.sh");
    std::fs::write(&script, "#!/bin/sh\nexit 1\n").unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let evaluator = format!("command:{}", path(&script));
    let o = attonet(&[
        "explore",
        "--base",
        path(&spec),
        "--generations",
        "1",
        "--evaluator",
        &evaluator,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("evaluator failed"));
}

#[test]
fn export_dot_has_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("c.json");
    let dot = dir.path().join("c.dot");
    attonet(&["build", "--network", "attonet-c", "--out", path(&spec)]);
    assert!(attonet(&["export-dot", path(&spec), "--out", path(&dot)])
        .status
        .success());
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    // stem 2 + 16 modules × 5 + head 3
    assert_eq!(text.matches("[label=").count(), 85);
    assert!(text.contains("\"m4.shortcut\" [label=\"conv/"));
    assert!(text.contains("[style=dashed]"));
}
