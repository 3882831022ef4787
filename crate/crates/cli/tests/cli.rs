use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subshock-lab"))
        .args(args)
        .env("SUBSHOCK_LOG", "error")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn sub(dir: &Path, cmd: &str, cfg: &Path, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join(out);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (run(&args), out)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn lax_violation_exits_2_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.json", r#"{"end_states": {"u_minus": -1.0, "u_plus": 1.0}, "epsilon": 0.1}"#);
    let (o, out) = sub(dir.path(), "hetero", &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Lax condition violated"));
    let r = report(&out);
    assert_eq!(r["status"], "invalid");
    assert_eq!(r["admissibility"]["lax_ok"], false);
    assert!(!out.join("profile.csv").exists());
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.json", r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0}, "speed": 0.3}"#);
    let (o, _) = sub(dir.path(), "spectrum", &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_of_range_epsilon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad.json", r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0}, "epsilon": 2.0}"#);
    let (o, out) = sub(dir.path(), "hetero", &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&out)["status"], "invalid");
}

#[test]
fn missing_intersection_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "small.json", r#"{"end_states": {"u_minus": 0.5, "u_plus": -0.5}}"#);
    let (o, out) = sub(dir.path(), "singular", &cfg, "out", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(report(&out)["status"], "failed");
}

#[test]
fn singular_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "h.json", r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0}}"#);
    let (o, out) = sub(dir.path(), "singular", &cfg, "out", &[]);
    assert!(o.status.success());
    let r = report(&out);
    assert_eq!(r["subcommand"], "singular");
    assert_eq!(r["admissibility"]["subshock_expected"], "yes");
    let res = &r["result"];
    assert!(res["w_star"].as_f64().unwrap().abs() < 1e-8);
    assert!(res["transversality_det"].as_f64().unwrap() > 0.0);
    assert_eq!(res["sandwich_holds"], true);
    let text = std::fs::read_to_string(out.join("singular_orbit.csv")).unwrap();
    assert!(text.starts_with("x,u,v,w\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_writes_every_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "h.json",
        r#"{"end_states": {"u_minus": 1.0, "u_plus": -1.0}, "eps_list": [0.2, 0.1, 0.05, 0.02, 0.01]}"#,
    );
    let (o, out) = sub(dir.path(), "sweep", &cfg, "out", &[]);
    assert!(o.status.success());
    for tag in ["0p2", "0p1", "0p05", "0p02", "0p01"] {
        assert!(out.join(format!("profile_eps_{tag}.csv")).exists(), "{tag}");
    }
    let conv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 6);
    assert_eq!(report(&out)["result"]["diagnostics"].as_array().unwrap().len(), 5);
}

#[test]
fn sequential_matches_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "h.json", r#"{"end_states": {"u_minus": 1.5, "u_plus": -0.9}, "epsilon": 0.1}"#);
    let (a, pa) = sub(dir.path(), "hetero", &cfg, "par", &[]);
    let (b, pb) = sub(dir.path(), "hetero", &cfg, "seq", &["--sequential"]);
    assert!(a.status.success() && b.status.success());
    let read = |p: &Path| std::fs::read(p.join("profile.csv")).unwrap();
    assert_eq!(read(&pa), read(&pb));
}

#[test]
fn pde_snapshots_carry_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "p.json",
        r#"{"end_states": {"u_minus": 1.5, "u_plus": -0.9}, "epsilon": 0.1,
            "pde": {"n_cells": 512, "t_final": 3.0, "snapshot_every": 0.25}}"#,
    );
    let (o, out) = sub(dir.path(), "pde", &cfg, "out", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = std::fs::read_to_string(out.join("snapshot_0004.csv")).unwrap();
    assert!(s.starts_with("# t=1.0\nx,u,v\n"), "{}", &s[..40]);
    assert!(!out.join("snapshot_0013.csv").exists());
}
