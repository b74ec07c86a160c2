//! End-to-end checks of the command-line interface: exit codes, artifact
//! layout, header contracts and sweep structure.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_haptolab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn fast_config(mode: &str) -> String {
    format!(
        r#"{{
  "coefficient": {{"kind": "constant", "value": 1.0}},
  "absorption": {{"kind": "linear"}},
  "initial": {{"u0": {{"sum": [{{"const": 1.0}}, {{"cos_mode": {{"k": 1}}}}]}}, "w0": {{"const": 0.5}}}},
  "grid": {{"left": 0.0, "right": 1.0, "n_cells": 16}},
  "family": {{"j": 1, "j_max": 2}},
  "solver": {{"dt_max": 1e-3, "t_end": 0.05, "sample_interval": 0.025}},
  "output": {{"snapshot_times": [0.05]}},
  "mode": {mode}
}}"#
    )
}

#[test]
fn simulate_single_produces_artifacts_with_exact_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfg.json",
        &fast_config(r#"{"kind": "single"}"#),
    );
    let out = tmp.path().join("out");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    let header = series.lines().next().unwrap();
    assert_eq!(
        header,
        "t,mass_u,mass_w,w_inf,w_min,E1,E2,E3,E_total,D1,D2,D3,mu,dev_L1,ln_du_min,ln_du_max,cum_dissipation,cum_wx_l2,cum_dev_sq,equi_worst"
    );
    assert!(series.lines().count() >= 3);

    let snap = fs::read_to_string(out.join("snap_t0.050000.csv")).unwrap();
    assert_eq!(snap.lines().next().unwrap(), "x,u,w,d_eps");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["hypothesis_report"]["integral_inv_d"]["value"].is_number());
    assert!(manifest["family"]["ledger"].is_array());
    assert_eq!(manifest["config"]["grid"]["n_cells"], 16);
}

#[test]
fn eps_sweep_summary_rows_follow_member_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfg.json",
        &fast_config(r#"{"kind": "eps_sweep", "js": [1, 2]}"#),
    );
    let out = tmp.path().join("out");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eps,final_dev_L1,final_w_inf,max_ln_du,energy_violations,wall_time_s"
    );
    let eps: Vec<f64> = lines
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(eps.len(), 2);
    // member values strictly decrease along the sweep order
    assert!(eps[0] > eps[1]);
    assert!(out.join("j1/series.csv").exists());
    assert!(out.join("j2/series.csv").exists());

    // the summary column reproduces the family values exactly
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let family_eps: Vec<f64> = manifest["family"]["epsilons"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(eps[0], family_eps[0]);
    assert_eq!(eps[1], family_eps[1]);
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"coefficient": {"kind": "constant"}}"#,
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn demanded_theorem_with_failing_hypotheses_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "gate.json",
        r#"{
  "coefficient": {"kind": "power_law", "center": 0.0, "theta": 1.5},
  "absorption": {"kind": "linear"},
  "initial": {"u0": {"const": 1.0}, "w0": {"abs_pow": {"center": 0.0, "power": 1.0}}},
  "grid": {"left": -1.0, "right": 1.0, "n_cells": 16},
  "family": {"j": 1, "j_max": 1},
  "solver": {"dt_max": 1e-3, "t_end": 0.01, "sample_interval": 0.01},
  "require_theorems": [2]
}"#,
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&output.stderr);
    assert!(
        msg.contains("reciprocal integral"),
        "gate message should name the failing integrability hypothesis: {msg}"
    );
}

#[test]
fn unwritable_output_dir_exits_2_before_any_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfg.json",
        &fast_config(r#"{"kind": "single"}"#),
    );
    // a file where the output directory should go
    let blocker = tmp.path().join("blocked");
    fs::write(&blocker, b"x").unwrap();
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn verify_family_writes_inspection_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfg.json",
        &fast_config(r#"{"kind": "single"}"#),
    );
    let out = tmp.path().join("bundle");
    let output = bin()
        .args(["verify-family", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("family verified"));

    let ledger = fs::read_to_string(out.join("family_ledger.csv")).unwrap();
    assert_eq!(
        ledger.lines().next().unwrap(),
        "j,eps,grad_sq_bound,grad_quartic_bound,floor_bound,log_slope_bound,w_energy,w_weight,sup_dist"
    );
    let fields = fs::read_to_string(out.join("family_fields.csv")).unwrap();
    assert_eq!(
        fields.lines().next().unwrap(),
        "j,x,d,d_eps,d_eps_x,w0j,w0eps"
    );
    // 2 members x 16 cells + header
    assert_eq!(fields.lines().count(), 2 * 16 + 1);
}

#[test]
fn hypotheses_subcommand_prints_report_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfg.json",
        &fast_config(r#"{"kind": "single"}"#),
    );
    let output = bin()
        .args(["hypotheses", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("stdout is a JSON report");
    assert_eq!(report["flags"]["theorem1"], true);
    assert!((report["integral_inv_d"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn seed_check_flag_verifies_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cfg.json",
        &fast_config(r#"{"kind": "single"}"#),
    );
    let out = tmp.path().join("out");
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--seed-check")
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("byte-identical"));
}
