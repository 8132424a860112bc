use std::path::PathBuf;
use std::process::{Command, Output};

use surfslice::harness::{bundled, RunConfig, ScenarioReport};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfslice")).args(args).output().expect("binary runs")
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_match_bundled_scenarios() {
    for c in bundled() {
        let path = configs_dir().join(format!("{}.toml", c.name));
        let loaded = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(loaded, c, "{}", c.name);
    }
}

#[test]
fn validate_accepts_shipped_configs() {
    for c in bundled() {
        let path = configs_dir().join(format!("{}.toml", c.name));
        let out = bin(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", c.name, String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let mut text = bundled()[0].to_toml();
    text.push_str("\n[surprise]\nvalue = 1\n");
    std::fs::write(&path, text).unwrap();
    assert_eq!(bin(&["validate", path.to_str().unwrap()]).status.code(), Some(2));

    let mut c = bundled()[0].clone();
    c.stepper.dt = 1.0;
    c.save(&path).unwrap();
    let out = bin(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(bin(&["validate", "/nonexistent/x.toml"]).status.code(), Some(1));
}

#[test]
fn emit_lists_and_writes() {
    let out = bin(&["emit"]);
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(names, bundled().iter().map(|c| c.name.clone()).collect::<Vec<_>>());
    let out = bin(&["emit", "galilean_rest"]);
    let c = RunConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(c.name, "galilean_rest");
    assert_eq!(bin(&["emit", "nope"]).status.code(), Some(2));
}

#[test]
fn fock_check_passes() {
    let out = bin(&["fock-check", "--trials", "20"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success());
    assert!(text.trim_end().ends_with("PASS"), "{text}");
}

#[test]
fn modes_prints_chain_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.toml");
    let lattice = surfslice::lattice_phonon::LatticeModel::chain(8, 1.0, 1.0, 1.0, surfslice::lattice_phonon::Boundary::Free);
    #[derive(serde::Serialize)]
    struct File {
        lattice: surfslice::lattice_phonon::LatticeModel,
    }
    std::fs::write(&path, toml::to_string(&File { lattice }).unwrap()).unwrap();
    let out = bin(&["modes", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let omega: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(omega.len(), 7);
    let top = 2.0 * (7.0 * std::f64::consts::PI / 16.0).sin();
    assert!(omega.iter().any(|w| (w - top).abs() < 1e-9), "{text}");
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    bundled().into_iter().find(|c| c.name == "galilean_rest").unwrap().save(&cfg).unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = ScenarioReport::load(&out_dir.join("report.toml")).unwrap();
    assert!(report.total_captured > 0.99);
    let out = bin(&["report", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("scenario galilean_rest"));
    assert!(text.contains("sum of |weight|^2"));
}
