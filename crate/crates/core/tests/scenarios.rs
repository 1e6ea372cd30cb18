use std::fs;
use std::path::{Path, PathBuf};

use relaqd_core::config::{load_config, parse_config};
use relaqd_core::scenario::run_scenario;
use relaqd_core::ErrorKind;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = load_config(&config("dirac_vacuum.toml")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_scenario(&cfg, Some(a.path())).unwrap();
    run_scenario(&cfg, Some(b.path())).unwrap();
    assert!(ra.outputs.iter().any(|o| o == "observables.csv"));
    for name in ["observables.csv", "final.fld"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn vacuum_plane_wave_keeps_unit_norm() {
    let cfg = load_config(&config("dirac_vacuum.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&cfg, Some(dir.path())).unwrap();
    let csv = fs::read_to_string(dir.path().join("observables.csv")).unwrap();
    let norm = column(&csv, "norm");
    assert_eq!(norm.len(), 1000 / 50 + 1);
    assert!(norm.iter().all(|n| (n - 1.0).abs() < 1e-12));
}

#[test]
fn bragg_scenario_writes_solution() {
    let cfg = load_config(&config("bragg.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&cfg, Some(dir.path())).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bragg.json")).unwrap()).unwrap();
    let kev = v["p_kev"].as_f64().unwrap();
    assert!((kev - 176.0).abs() < 0.02 * 176.0, "{kev}");
}

#[test]
fn kd_scan_reports_norm_and_transfer() {
    let text = r#"
kind = "kapitza-dirac"

[laser]
photon_ev = 3100.0
intensity_w_cm2 = 1.0e22
ramp_cycles = 4

[electron]
bragg = [1, -1]
theta_deg = 179.0

[ladder]
n_min = -4
n_max = 6

[propagator]
steps_per_cycle = 64

[scan]
flat_max = 20
flat_step = 5
n_target = 2
"#;
    let mut cfg = parse_config(text).unwrap();
    cfg.set_kd_mode(relaqd_core::config::KdMode::Scan).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&cfg, Some(dir.path())).unwrap();
    let csv = fs::read_to_string(dir.path().join("rabi_scan.csv")).unwrap();
    let norm = column(&csv, "norm");
    assert_eq!(norm.len(), 5);
    assert!(norm.iter().all(|n| (n - 1.0).abs() < 1e-9));
    let flat = column(&csv, "flat_cycles");
    assert_eq!(flat, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn config_errors_name_the_key() {
    let err = parse_config("kind = \"bragg\"\n[bragg]\nn_r = 2\nn_l = -1\nphoton_ev = 3100.0\ncolour = 1\n").unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
    assert!(err.to_string().contains("colour"), "{err}");
    let err = parse_config("kind = \"teleport\"\n").unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Config);
}
