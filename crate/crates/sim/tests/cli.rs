use std::path::Path;
use std::process::{Command, Output};

use admittance_core::synthetic::unmetered_inertia_ramp;
use admittance_sim::csv_trace::{read_trace_file, write_trace_file};

fn admittance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admittance"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_detection_without_adaptation_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let res = admittance(&[
        "run",
        "--scenario",
        "fig2",
        "--no-adapt",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let trace = read_trace_file(&out).unwrap();
    assert_eq!(trace.len(), 12_000);
    assert!(trace.records.iter().any(|r| r.flag));
}

#[test]
fn run_with_audit_passes_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["conservative", "tank"] {
        let out = dir.path().join(format!("{mode}.csv"));
        let res = admittance(&[
            "run",
            "--scenario",
            "fig3_tank_vs_conservative",
            "--mode",
            mode,
            "--damping-mode",
            "ratio",
            "--audit",
            "--out",
            path_str(&out),
        ]);
        assert_eq!(
            res.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(String::from_utf8_lossy(&res.stdout).contains("passive"));
    }
}

#[test]
fn audit_of_violating_trace_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    write_trace_file(&unmetered_inertia_ramp(), &path).unwrap();
    let res = admittance(&["audit", "--trace", path_str(&path)]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn audit_of_corpus_trace_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let res = admittance(&["run", "--scenario", "fig1", "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(0));
    let res = admittance(&["audit", "--trace", path_str(&out)]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
}

#[test]
fn unknown_flag_exits_1_with_usage() {
    let res = admittance(&["run", "--scenario", "fig2", "--frobnicate"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage"));
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[params]\ninertia = [-1.0, 2, 2, 0.5, 0.5, 0.5]\n").unwrap();
    let out = dir.path().join("t.csv");
    let res = admittance(&["run", "--scenario", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("params.inertia[0]"));
}

#[test]
fn diverging_run_exits_3_and_keeps_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("blow.toml");
    std::fs::write(
        &sc,
        "duration = 1.0\n\
         [params]\ninertia = [1e-300, 2, 2, 0.5, 0.5, 0.5]\n\
         [limits]\nvelocity = [1e300, 1.5, 1.3, 0.9, 0.9, 0.9]\n\
         [adaptation]\nenabled = false\n\
         [arm]\nsensor_delay = 1\n\
         [[arm.waypoints]]\nt = 0.0\nx = [0.1, 0, 0, 0, 0, 0]\n",
    )
    .unwrap();
    let out = dir.path().join("t.csv");
    let res = admittance(&["run", "--scenario", path_str(&sc), "--out", path_str(&out)]);
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(out.exists());
}

#[test]
fn corpus_lists_four_scenarios() {
    let res = admittance(&["corpus"]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&res.stdout).lines().count(), 4);
    let res = admittance(&["corpus", "--show", "fig5"]);
    assert!(String::from_utf8_lossy(&res.stdout).contains("constant_ratio"));
}

#[test]
fn calibrate_brackets_critical_stiffness() {
    let res = admittance(&[
        "calibrate",
        "--scenario",
        "fig2",
        "--k-max",
        "60000",
        "--iterations",
        "4",
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.starts_with("k_N_per_m,growth"));
    assert!(text.contains("critical stiffness between"));
}

#[test]
fn batch_writes_one_file_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let res = admittance(&[
        "batch",
        "fig1",
        "fig3",
        "--audit",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(dir.path().join("fig1_unstable_nominal.csv").exists());
    assert!(dir.path().join("fig3_tank_vs_conservative.csv").exists());
}
