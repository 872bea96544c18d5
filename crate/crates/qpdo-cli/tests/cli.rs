//! End-to-end CLI behavior: exit codes, artifact layout, override handling.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpdo"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpdo_cli_{}_{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn unknown_command_exits_64() {
    let status = bin().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(64));
}

#[test]
fn invalid_config_exits_65() {
    let out = tmp("cfg");
    let status = bin()
        .args(["solve-unique", "--out"])
        .arg(&out)
        .args(["--override", "grid.h=not_a_number_field=2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(65));
    // Unknown symbol names are configuration errors too.
    let status = bin()
        .args(["solve-unique", "--out"])
        .arg(&out)
        .args(["--override", "model.symbol=mystery(1)"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(65));
}

#[test]
fn precondition_rejection_exits_2_with_measured_defect() {
    let out = tmp("reject");
    let output = bin()
        .args(["solve-nonlocal", "--out"])
        .arg(&out)
        .args(["--override", "boundary.kind=plain"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("f~(0)"), "defect not reported: {stderr}");
    // The measured compatibility defect is still written for inspection.
    let compat = std::fs::read_to_string(out.join("compatibility.csv")).unwrap();
    assert!(compat.starts_with("quantity,value"));
    assert!(std::fs::read_to_string(out.join("error.meta"))
        .unwrap()
        .contains("exit = 2"));
}

#[test]
fn project_with_near_zero_input_succeeds() {
    let out = tmp("proj");
    let status = bin()
        .args(["project", "--out"])
        .arg(&out)
        .args(["--override", "projector.sigma_cells=0.4"])
        .args(["--override", "grid.n=8"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("projector.csv")).unwrap();
    assert!(csv.starts_with("realization,epsilon,N,idempotence_err,agreement_err"));
    assert!(csv.lines().count() >= 4);
    let meta = std::fs::read_to_string(out.join("run.meta")).unwrap();
    assert!(meta.contains("command = project"));
    assert!(meta.contains("seed = 0"));
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let out = tmp("seed");
    let status = bin()
        .args(["factorize-exp", "--seed", "42", "--out"])
        .arg(&out)
        .args(["--override", "factorize.seeds=2"])
        .args(["--override", "grid.n=16"])
        .status()
        .unwrap();
    assert!(status.success());
    let meta = std::fs::read_to_string(out.join("run.meta")).unwrap();
    assert!(meta.contains("seed = 42"));
    let csv = std::fs::read_to_string(out.join("factorize.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("42,"));
}

#[test]
fn config_file_round_trip() {
    let out = tmp("file");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("exp.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n[grid]\nh = 0.25\nn = 16\n[model]\nsymbol = \"exp_split(2,0.8)\"\n",
    )
    .unwrap();
    let status = bin()
        .args(["solve-unique", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out.join("run"))
        .status()
        .unwrap();
    assert!(status.success());
    let solver = std::fs::read_to_string(out.join("run/solver.csv")).unwrap();
    assert!(solver.contains("solve_unique"));
    let meta = std::fs::read_to_string(out.join("run/run.meta")).unwrap();
    assert!(meta.contains("h = 2.5"));
    assert!(meta.contains("N = 16"));
}
