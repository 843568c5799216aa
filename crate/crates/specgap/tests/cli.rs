//! End-to-end checks of the command-line interface: exit codes, output
//! formats, and bit-exact reruns from the emitted config file.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_specgap")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn specgap")
}

#[test]
fn bounds_report_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["bounds", "--gamma", "1", "-o", "report.json"]);
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let s_bo = doc["optimized"]["s_bo_lower"].as_f64().unwrap();
    let expected = std::f64::consts::PI * (0.125f64).sqrt() * (-0.5f64).exp() / 24.0;
    assert!((s_bo - expected).abs() < 1e-12);
    assert!((doc["optimized"]["s_la_lower"].as_f64().unwrap() / s_bo - 6.0).abs() < 1e-9);
    assert!(dir.path().join("report.config.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["bounds", "--phi", "constant:0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["gap", "--truncation", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["verify", "--suite", "lemma3", "--b", "linear"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["grazing", "--eps", "0.1,0.2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn grazing_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "grazing",
            "--eps",
            "0.4,0.2",
            "--velocity-order",
            "6",
            "-o",
            "sweep.csv",
        ],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eps,d_boltzmann,c_times_d_landau,rel_error");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("# fitted_order="));
}

#[test]
fn verify_summary_and_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "verify",
            "--suite",
            "cmcv",
            "--gamma",
            "0",
            "--n",
            "3",
            "--degree",
            "4",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.contains("\"pass\":3") && last.contains("\"fail\":0"));
}

#[test]
fn config_rerun_is_bit_exact_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "gap",
            "--operator",
            "landau",
            "--phi",
            "constant:1",
            "--truncation",
            "4",
            "-o",
            "gap.json",
        ],
    );
    assert!(out.status.success());
    let first = std::fs::read(dir.path().join("gap.json")).unwrap();
    for threads in ["1", "3"] {
        let out = Command::new(bin())
            .args(["--config", "gap.config.json"])
            .env("SPECGAP_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        let again = std::fs::read(dir.path().join("gap.json")).unwrap();
        assert_eq!(first, again, "output drifted with {threads} threads");
    }
}
