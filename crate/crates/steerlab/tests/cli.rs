use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn steerlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steerlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("STEERLAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn csv_rows(dir: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    assert!(text.ends_with('\n') && !text.contains('\r'));
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

#[test]
fn loop_run_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(
        &["run", "--experiment", "loop", "--r", "0.5", "--xi", "1e-2"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let (header, rows) = csv_rows(dir.path());
    assert_eq!(
        header,
        [
            "r",
            "xi",
            "phase_sim",
            "phase_closed",
            "phase_delta",
            "visibility_sim",
            "visibility_closed",
            "visibility_delta",
            "steps"
        ]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "5.00000000000e-1");
    assert!((num(&rows[0][2]) + 1.10567).abs() < 1e-3);
    assert!(num(&rows[0][4]) >= 0.0 && num(&rows[0][7]) >= 0.0);

    let rep = report(dir.path());
    assert_eq!(rep["inputs"]["phi0"], 0.0);
    assert_eq!(rep["inputs"]["frame"], "Lab");
    assert_eq!(rep["passed"], true);
    assert!(rep["runs"][0]["wall_ms"].as_f64().is_some());
}

#[test]
fn config_file_with_unknown_keys_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment":"loop","gamma":1,"xii":2}"#).unwrap();
    let out = steerlab(
        &["run", "--config", cfg.to_str().unwrap()],
        &dir.path().join("o"),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma") && err.contains("xii"), "{err}");
}

#[test]
fn zero_xi_is_rejected_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(&["run", "--experiment", "loop", "--xi", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`xi`") && err.contains("0 < xi"), "{err}");
}

#[test]
fn sweep_rows_sorted_and_range_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(
        &[
            "run",
            "--experiment",
            "sweep",
            "--xi-range",
            "1e-1:1.25e-2:0.5",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, rows) = csv_rows(dir.path());
    let xs: Vec<f64> = rows.iter().map(|r| num(&r[1])).collect();
    assert_eq!(xs, [1.25e-2, 2.5e-2, 5e-2, 1e-1]);
    let rep = report(dir.path());
    assert_eq!(rep["inputs"]["xi"].as_array().unwrap().len(), 4);
    assert_eq!(rep["inputs"]["xi_range"]["factor"], 0.5);
}

#[test]
fn failing_sweep_points_are_reported_and_others_still_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(
        &[
            "run",
            "--experiment",
            "sweep",
            "--xi-range",
            "1e-1:1.25e-2:0.5",
            "--steps-per-period",
            "200",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let rep = report(dir.path());
    let failures = rep["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    assert!(failures[0]["point"].as_str().unwrap().contains("xi="));
    let (_, rows) = csv_rows(dir.path());
    assert!(!rows.is_empty());
    assert_eq!(rows.len() + failures.len(), 4);
}

#[test]
fn berry_experiment_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(&["run", "--experiment", "berry"], dir.path());
    assert!(out.status.success());
    let (header, rows) = csv_rows(dir.path());
    assert_eq!(
        header,
        [
            "r",
            "n_steps",
            "berry_numeric",
            "berry_closed",
            "berry_delta"
        ]
    );
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(num(&row[4]) < 1e-6);
    }
}

#[test]
fn polarization_experiment_reports_stokes() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(
        &[
            "run",
            "--experiment",
            "polarization",
            "--r",
            "0.5",
            "--r2",
            "1.0",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let (_, rows) = csv_rows(dir.path());
    let delta = num(&rows[0][2]);
    assert!((delta - 1.20088).abs() < 1e-5);
    let s: Vec<f64> = rows[0][3..7].iter().map(|c| num(c)).collect();
    assert_eq!(s[0], 1.0);
    assert!((s[1] - delta.cos()).abs() < 1e-11);
    assert!((s[2] - delta.sin()).abs() < 1e-11);
    assert_eq!(s[3], 0.0);
}

#[test]
fn five_level_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(
        &[
            "run",
            "--experiment",
            "fivelevel",
            "--r",
            "0.5",
            "--r2",
            "1",
            "--xi",
            "1e-2",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let (header, rows) = csv_rows(dir.path());
    assert_eq!(header[..3], ["r1", "r2", "xi"]);
    assert!(num(&rows[0][5]) < 0.05);
}

#[test]
fn rotating_frame_flag_matches_lab() {
    let lab = tempfile::tempdir().unwrap();
    let rot = tempfile::tempdir().unwrap();
    for (dir, frame) in [(&lab, "lab"), (&rot, "rotating")] {
        let out = steerlab(
            &[
                "run",
                "--experiment",
                "loop",
                "--xi",
                "5e-2",
                "--frame",
                frame,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = csv_rows(lab.path()).1;
    let b = csv_rows(rot.path()).1;
    assert!((num(&a[0][2]) - num(&b[0][2])).abs() < 1e-9);
    assert_eq!(report(rot.path())["inputs"]["frame"], "Rotating");
}

#[test]
fn worker_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_steerlab"))
        .args(["run", "--experiment", "polarization", "--out"])
        .arg(dir.path())
        .env("STEERLAB_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("STEERLAB_WORKERS"));
}

#[test]
fn coarse_verify_fails_and_names_the_order_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = steerlab(&["verify", "--steps-per-period", "10"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL criterion rk4-order"), "{stdout}");
    let rep = report(dir.path());
    assert_eq!(rep["passed"], false);
    assert!(dir.path().join("results.csv").exists());
}
