use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tripod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
        .display()
        .to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

const IDENTITY: &str = "[medium]\nkappa = 1.0\n\n[controls]\namplitude = 1.0\n\n\
    [[storage]]\nphi = 0.0\n\n[release]\nstage1 = { phi = 0.0 }\n\n[[packets]]\nwidth = 16.0\n";

#[test]
fn unknown_subcommand_prints_usage() {
    let out = tripod(&["frobnicate"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("Usage"), "{}", text(&out.stderr));
}

#[test]
fn validate_rejects_cfl_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &IDENTITY.replace("kappa = 1.0", "kappa = 1.0\ndt = 5.0"),
    );
    let out = tripod(&["--config", &cfg, "validate"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("CFL"), "{}", text(&out.stderr));
}

#[test]
fn validate_reports_diagnostics() {
    let out = tripod(&["--config", &scenario_path("identity"), "validate"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("cfl: 1\n"), "{stdout}");
    assert!(!stdout.contains("warning"), "{stdout}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &IDENTITY.replace("amplitude = 1.0", "amplitude = 1.0\nshape = \"square\""),
    );
    let out = tripod(&["--config", &cfg, "validate"]);
    assert!(out.status.success());
    assert!(text(&out.stdout).contains("warning: square switching"));
}

#[test]
fn misspelled_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &IDENTITY.replace("amplitude", "amplitud"));
    let out = tripod(&["--config", &cfg, "validate"]);
    assert!(!out.status.success());
    let err = text(&out.stderr);
    assert!(
        err.contains("controls.amplitud") && err.contains("controls.amplitude"),
        "{err}"
    );
}

#[test]
fn bs_matrix_of_identical_sets_is_the_identity() {
    let out = tripod(&[
        "bs-matrix",
        "--set0",
        "0.3,1.0,2.0",
        "--set1",
        "0.3,1.0,2.0",
    ]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(
        stdout.contains(
            "R31 = +1.000000000000 +0.000000000000i   R32 = +0.000000000000 +0.000000000000i"
        ),
        "{stdout}"
    );
    assert!(
        stdout.contains("R42 = +1.000000000000 +0.000000000000i"),
        "{stdout}"
    );
}

#[test]
fn random_bs_matrix_follows_the_seed() {
    let a = tripod(&["bs-matrix", "--random", "--seed", "11"]);
    let b = tripod(&["bs-matrix", "--random", "--seed", "11"]);
    let c = tripod(&["bs-matrix", "--random", "--seed", "12"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn hom_scan_dip_is_zero_at_zero_separation() {
    let out = tripod(&[
        "hom-scan", "--start", "-5", "--stop", "5", "--points", "101",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("x,p_noncoal,p_coal1,p_coal2,abs_s"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    assert_eq!(rows.len(), 101);
    let (xmin, pmin) = rows
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert_eq!(xmin, 0.0);
    assert!(pmin.abs() < 1e-12);
}

#[test]
fn simulate_output_is_byte_stable() {
    let cfg = scenario_path("identity");
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for d in &runs {
        let out = tripod(&[
            "--config",
            &cfg,
            "--out",
            d.path().to_str().unwrap(),
            "simulate",
        ]);
        assert!(out.status.success(), "{}", text(&out.stderr));
    }
    for name in ["trace_1.csv", "summary.json"] {
        let a = fs::read(runs[0].path().join(name)).unwrap();
        let b = fs::read(runs[1].path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name}");
    }
    let csv = fs::read_to_string(runs[0].path().join("trace_1.csv")).unwrap();
    assert!(csv.starts_with("t,flux,norm,theta,phi\n"));
}

#[test]
fn format_flag_selects_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = tripod(&[
        "--config",
        &scenario_path("identity"),
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
        "simulate",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(dir.path().join("summary.json").exists());
    assert!(!dir.path().join("trace_1.csv").exists());
}
