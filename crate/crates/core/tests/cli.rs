use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dissipon::cli::{RunManifest, MANIFEST_NAME};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dissipon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dissipon")).args(args).output().unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn note(csv: &str, key: &str) -> Option<String> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

#[test]
fn fdt_run_writes_flat_classical_spectrum() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("fdt.toml");
    let o = dissipon(&["run", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.path().join("fdt.csv")).unwrap();
    assert!(note(&csv, "config_sha256").is_some());
    for r in data_rows(&csv) {
        // 2 k_BT γ with k_BT = 2, γ = 1.
        assert!((r[1] - 4.0).abs() < 1e-12 && (r[4] - 4.0).abs() < 1e-12);
    }
    assert!(out.path().join("fdt.gp").exists());
}

#[test]
fn msd_override_to_classical_has_diffusive_slope() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("msd.toml");
    let o = dissipon(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--override",
        "bath.mode=Classical",
        "--override",
        "bath.cutoff=1e6",
        "--out",
        out.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.path().join("msd.csv")).unwrap();
    let slope: f64 = note(&csv, "late_slope").unwrap().parse().unwrap();
    // Last decade of [0.1, 20]: 6 k_BT/γ (1 − e^{−γt/m}) averaged over it is within 0.1% of 6.
    assert!((slope - 6.0).abs() < 0.05 * 6.0, "slope {slope}");
}

#[test]
fn missing_block_exits_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("fdt.toml")).unwrap();
    let cut = text.replace("[model]\nkind = \"ohmic\"\ngamma = 1.0\n", "");
    let path = dir.path().join("bad.toml");
    fs::write(&path, cut).unwrap();
    let o = dissipon(&["run", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[model]"));
    assert!(!dir.path().join("o").join(MANIFEST_NAME).exists());
}

#[test]
fn validate_reports_all_errors_at_once() {
    let cfg = configs().join("fdt.toml");
    let ok = dissipon(&["validate", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = dissipon(&[
        "validate",
        cfg.to_str().unwrap(),
        "--override",
        "bath.temperature=-2",
        "--override",
        "grid.colour=3",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("bath.temperature") && err.contains("grid.colour"), "{err}");
}

#[test]
fn numerical_failure_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("msd.toml");
    // A quantum Ohmic bath with no cutoff diverges.
    let text = fs::read_to_string(&cfg).unwrap().replace("cutoff = 100.0\n", "");
    let path = dir.path().join("q.toml");
    fs::write(&path, text).unwrap();
    let o = dissipon(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join(MANIFEST_NAME).exists());
}

#[test]
fn manifest_checksums_match_outputs() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("cherenkov.toml");
    let o = dissipon(&["run", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--quiet"]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.path().join(MANIFEST_NAME)).unwrap();
    let files: Vec<(String, String)> = text
        .lines()
        .filter_map(|l| l.strip_prefix("file="))
        .map(|l| {
            let (n, s) = l.split_once(" sha256=").unwrap();
            (n.to_string(), s.to_string())
        })
        .collect();
    assert_eq!(files.len(), 3);
    let m = RunManifest {
        config_hash: String::new(),
        library_version: String::new(),
        wall_clock_seconds: 0.0,
        files,
    };
    assert!(m.verify(out.path()).is_empty());
}

#[test]
fn threads_flag_and_env_do_not_change_results() {
    let cfg = configs().join("simulate.toml");
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = dissipon(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--threads", "1", "--quiet"]);
    assert!(o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_dissipon"))
        .args(["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--quiet"])
        .env("DISSIPON_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(a.join("simulate.csv")).unwrap(), fs::read(b.join("simulate.csv")).unwrap());
}

#[test]
fn override_precedence_in_outputs() {
    let cfg = configs().join("fdt.toml");
    let dir = tempfile::tempdir().unwrap();
    let o = dissipon(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--quiet",
        "--override",
        "bath.temperature=5",
        "--override",
        "bath.temperature=3",
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("fdt.csv")).unwrap();
    assert!((data_rows(&csv)[0][1] - 6.0).abs() < 1e-12);
}
