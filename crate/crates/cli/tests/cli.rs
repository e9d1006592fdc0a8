//! End-to-end checks of the command-line surface: flags, config files,
//! formats, and exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hodgefem"))
}

fn tmpdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("hodgefem_cli_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn convergence_reports_expected_columns() {
    let out = bin()
        .args(["convergence", "--domain", "unit_square", "--levels", "2..3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("level,h,dofs,e0,erot,ediv,rate0,raterot,ratediv,seconds")
    );
    assert_eq!(text.lines().count(), 3);
    // first row carries no rates
    let first = text.lines().nth(1).unwrap();
    assert!(first.contains(",,,"));
}

#[test]
fn single_level_convergence_is_a_config_error() {
    let out = bin()
        .args(["convergence", "--levels", "2..2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_domain_is_a_usage_error() {
    let out = bin()
        .args(["diagnose", "--domain", "pentagon"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equivalence_tolerance_flag_is_honored() {
    // residuals sit near 1e−13; an absurdly small tolerance must fail
    let out = bin()
        .args(["equivalence", "--domain", "unit_square", "--levels", "1..1"])
        .args(["--tol", "1e-30"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // and the default passes
    let out = bin()
        .args(["equivalence", "--domain", "unit_square", "--levels", "1..1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tmpdir();
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "# study configuration\ndomain=unit_square\nlevels=2..3\nformat=markdown\n",
    )
    .unwrap();
    let out = bin()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("| level | h |"), "markdown table expected");
    // a flag overrides the file
    let out = bin()
        .args(["convergence", "--config"])
        .arg(&cfg)
        .args(["--format", "csv"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("level,h,"));
}

#[test]
fn bad_config_file_is_a_config_error() {
    let dir = tmpdir();
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "domain unit_square\n").unwrap();
    let out = bin()
        .args(["diagnose", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mesh_generate_and_validate_round_trip() {
    let dir = tmpdir();
    let path = dir.join("mesh.txt");
    let out = bin()
        .args(["mesh", "generate", "--domain", "lshape", "--level", "2", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .args(["mesh", "validate", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("betti1 0"));

    // corrupt the boundary section: validation must fail
    let content = std::fs::read_to_string(&path).unwrap();
    let corrupt = content.replacen("boundary", "boundary_", 1);
    std::fs::write(&path, corrupt).unwrap();
    let out = bin()
        .args(["mesh", "validate", "--input"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diagnose_detects_topology() {
    let out = bin()
        .args(["diagnose", "--domain", "square_with_hole", "--levels", "1..1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[6], "1", "harmonic_dim");
    assert_eq!(cols[7], "1", "betti1");
}

#[test]
fn wall_timing_mode_fills_the_seconds_column() {
    let out = bin()
        .args([
            "convergence",
            "--domain",
            "unit_square",
            "--levels",
            "2..3",
            "--timing",
            "wall",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let last = text.lines().last().unwrap();
    let seconds: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!(seconds > 0.0);
}
