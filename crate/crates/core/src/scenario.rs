//! Runs a parsed scenario and writes its artifacts.
//!
//! Every run writes its result files plus `manifest.json` into one output
//! directory. Result files depend only on the configuration: numbers are
//! printed with a fixed format and JSON objects have a fixed key order, so a
//! rerun reproduces them byte for byte. Only the manifest's timing field
//! changes between runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::bench::{environment, run_bench};
use crate::config::{
    BraggScenario, GridScenario, InitialState, KdMode, KdScenario, ScenarioBody, ScenarioConfig, ScenarioKind,
    WkbScenario, DIRAC_OBSERVABLES, KG_OBSERVABLES,
};
use crate::dirac::{propagate_dirac, DiracPropagatorConfig, DiracSample};
use crate::error::{Error, Result};
use crate::field::{PairField, SpinorField};
use crate::initial::{dirac_packet, kg_packet};
use crate::kapitza_dirac::{
    bragg_momentum, mode_label, plane_wave_spinor, propagate_modes, rabi_scan, tune_resonance, with_cutoff_extension,
    FloquetResonance, ModeBasis, Occupations, PropagateOptions, ScanOptions,
};
use crate::kg::{fv_plane_wave_discrete, propagate_kg, KgPropagatorConfig, KgSample};
use crate::snapshot;
use crate::units::PhysicalConstants;
use crate::vec3::norm;
use crate::wkb::{most_probable_pz_in, wkb_map};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub kind: String,
    pub config_sha256: String,
    pub seed: u64,
    pub package: String,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// Result files, relative to `out_dir`, in the order written.
    pub outputs: Vec<String>,
    pub manifest: Manifest,
}

/// Fixed-width scientific notation with 15 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.14e}")
}

struct Sink {
    dir: PathBuf,
    files: Vec<String>,
}

impl Sink {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Runs `cfg`, writing into `out_dir` (or the configured directory, or the
/// working directory). Solver errors come back wrapped with the scenario
/// kind.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<RunReport> {
    let start = Instant::now();
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut sink = Sink { dir, files: Vec::new() };
    let kind = cfg.kind.as_str();
    log::info!("running {kind} scenario into {}", sink.dir.display());
    let run = match &cfg.body {
        ScenarioBody::Grid(g) => run_grid(cfg, g, &mut sink),
        ScenarioBody::KapitzaDirac(kd) => run_kd(cfg, kd, &mut sink),
        ScenarioBody::Wkb(w) => run_wkb(cfg.kind, w, &mut sink),
        ScenarioBody::Bragg(b) => run_bragg(b, &cfg.units, &mut sink),
        ScenarioBody::Bench(plan) => run_bench(plan).and_then(|rep| {
            sink.write("bench.csv", rep.to_csv().as_bytes())?;
            if !rep.failures.is_empty() {
                sink.json("bench_failures.json", &rep.failures)?;
            }
            sink.json("environment.json", &environment())
        }),
    };
    run.map_err(|e| e.context(format!("{kind} scenario")))?;
    let manifest = Manifest {
        kind: kind.to_string(),
        config_sha256: cfg.source_sha256.clone(),
        seed: cfg.seed,
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: sink.files.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let outputs = sink.files.clone();
    sink.json("manifest.json", &manifest)?;
    Ok(RunReport {
        out_dir: sink.dir,
        outputs,
        manifest,
    })
}

fn csv_table(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn selected(cfg: &ScenarioConfig, all: &[&str]) -> Vec<String> {
    cfg.output
        .observables
        .clone()
        .unwrap_or_else(|| all.iter().map(|s| s.to_string()).collect())
}

fn check_grid<const C: usize>(f: &crate::field::Field<C>, g: &GridScenario, path: &Path) -> Result<()> {
    if f.grid() != &g.grid {
        return Err(Error::config(
            "initial.path",
            format!("{} holds a field on {:?}, the scenario grid is {:?}", path.display(), f.grid(), g.grid),
        ));
    }
    Ok(())
}

fn dirac_initial(g: &GridScenario, units: &PhysicalConstants) -> Result<SpinorField> {
    match &g.initial {
        InitialState::Packet { packet, spin, sign } => dirac_packet(&g.grid, packet, *spin, *sign, units),
        InitialState::PlaneWave { momentum, spin, sign } => {
            let u = plane_wave_spinor(*momentum, *spin, *sign, units).u;
            crate::dirac::dirac_plane_wave(&g.grid, *momentum, &u, units)
        }
        InitialState::File(path) => {
            let (f, _) = snapshot::load::<4>(path)?;
            check_grid(&f, g, path)?;
            Ok(f)
        }
    }
}

fn kg_initial(g: &GridScenario, units: &PhysicalConstants) -> Result<PairField> {
    match &g.initial {
        InitialState::Packet { packet, sign, .. } => kg_packet(&g.grid, packet, *sign, g.stencil_order, units),
        InitialState::PlaneWave { momentum, sign, .. } => {
            fv_plane_wave_discrete(*momentum, sign.signum(), &g.grid, g.stencil_order, units)
        }
        InitialState::File(path) => {
            let (f, _) = snapshot::load::<2>(path)?;
            check_grid(&f, g, path)?;
            Ok(f)
        }
    }
}

fn dirac_column(s: &DiracSample, name: &str) -> f64 {
    match name {
        "norm" => s.norm,
        "pos_fraction" => s.pos_fraction,
        "x_mean" => s.x_mean,
        _ => s.z_mean,
    }
}

fn kg_column(s: &KgSample, name: &str) -> f64 {
    match name {
        "charge" => s.charge,
        "density" => s.density,
        "x_mean" => s.x_mean,
        _ => s.z_mean,
    }
}

fn run_grid(cfg: &ScenarioConfig, g: &GridScenario, sink: &mut Sink) -> Result<()> {
    let t_end = g.t0 + g.steps as f64 * g.dt;
    match cfg.kind {
        ScenarioKind::PropagateDirac => {
            let psi = dirac_initial(g, &cfg.units)?;
            let mut pc = DiracPropagatorConfig::new(g.dt, g.steps, g.potential.clone());
            pc.t0 = g.t0;
            pc.mask = g.mask;
            pc.sample_every = cfg.output.every;
            pc.consts = cfg.units;
            let (psi, trace) = propagate_dirac(psi, &pc)?;
            let cols = selected(cfg, &DIRAC_OBSERVABLES);
            let header: Vec<String> = std::iter::once("t".to_string()).chain(cols.iter().cloned()).collect();
            let rows = trace
                .iter()
                .map(|s| std::iter::once(s.t).chain(cols.iter().map(|c| dirac_column(s, c))).collect());
            sink.write("observables.csv", csv_table(&header, rows).as_bytes())?;
            if cfg.output.snapshot {
                snapshot::save(&sink.path("final.fld"), &psi, t_end)?;
                sink.files.push("final.fld".into());
            }
        }
        _ => {
            let psi = kg_initial(g, &cfg.units)?;
            let mut pc = KgPropagatorConfig::new(g.dt, g.steps, g.potential.clone());
            pc.t0 = g.t0;
            pc.mask = g.mask;
            pc.sample_every = cfg.output.every;
            pc.consts = cfg.units;
            pc.stencil_order = g.stencil_order;
            let (psi, trace) = propagate_kg(psi, &pc)?;
            let cols = selected(cfg, &KG_OBSERVABLES);
            let header: Vec<String> = std::iter::once("t".to_string()).chain(cols.iter().cloned()).collect();
            let rows = trace
                .iter()
                .map(|s| std::iter::once(s.t).chain(cols.iter().map(|c| kg_column(s, c))).collect());
            sink.write("observables.csv", csv_table(&header, rows).as_bytes())?;
            if cfg.output.snapshot {
                snapshot::save(&sink.path("final.fld"), &psi, t_end)?;
                sink.files.push("final.fld".into());
            }
        }
    }
    Ok(())
}

/// Header cells and values for the tracked ladder sites: the site total
/// followed by its four modes.
fn occupation_columns(tracked: &[i32]) -> Vec<String> {
    tracked
        .iter()
        .flat_map(|n| std::iter::once(format!("n{n}")).chain((0..4).map(move |g| format!("n{n}_{}", mode_label(g)))))
        .collect()
}

fn occupation_values(occ: &Occupations, tracked: &[i32]) -> Vec<f64> {
    tracked
        .iter()
        .flat_map(|&n| {
            let m = occ.modes_at(n).unwrap_or([0.0; 4]);
            std::iter::once(occ.at(n).unwrap_or(0.0)).chain(m)
        })
        .collect()
}

fn run_kd(cfg: &ScenarioConfig, kd: &KdScenario, sink: &mut Sink) -> Result<()> {
    let units = cfg.units;
    let laser = &kd.laser;
    let tl = laser.period(&units);
    let base = ModeBasis::new(kd.momentum, laser.k, kd.n_min, kd.n_max, units)?;
    let mut resonance: Option<FloquetResonance> = None;
    let basis = match &kd.tune {
        Some(t) => {
            let r = tune_resonance(&base, laser, t)?;
            log::info!("tuned |p| from {} to {}", norm(kd.momentum), r.p_mag);
            resonance = Some(r.resonance);
            r.basis
        }
        None => base,
    };
    let p_mag = norm(basis.p());
    let mut summary = json!({
        "p_mag": p_mag,
        "p_kev": units.momentum_to_kev(p_mag),
        "momentum": basis.p(),
        "laser_period": tl,
        "field_amplitude": norm(laser.e),
        "tuned": kd.tune.is_some(),
    });
    if let Some(r) = &resonance {
        summary["floquet"] = json!({
            "detuning": r.detuning,
            "splitting": r.splitting,
            "rabi_period_over_tl": r.rabi_period(units.hbar) / tl,
        });
    }
    match kd.mode {
        KdMode::Evolve => {
            let opts = PropagateOptions {
                dt: tl / kd.steps_per_cycle as f64,
                record_every: cfg.output.every,
                frame_energy: None,
            };
            let (basis, traj) = with_cutoff_extension(&basis, kd.extend_step, kd.max_extensions, |b| {
                propagate_modes(b, laser, &opts)
            })?;
            let tracked: Vec<i32> = if cfg.output.track_n.is_empty() {
                (kd.n_min..=kd.n_max).collect()
            } else {
                cfg.output.track_n.clone()
            };
            let header: Vec<String> = ["t".to_string(), "norm".to_string()]
                .into_iter()
                .chain(occupation_columns(&tracked))
                .collect();
            let rows = traj.iter().map(|s| {
                let occ = crate::kapitza_dirac::occupations(s, &basis);
                [s.t, occ.sum()].into_iter().chain(occupation_values(&occ, &tracked)).collect()
            });
            sink.write("occupations.csv", csv_table(&header, rows).as_bytes())?;
            let last = traj.last().expect("trajectory holds the initial state");
            let occ = crate::kapitza_dirac::occupations(last, &basis);
            summary["mode"] = json!("evolve");
            summary["ladder"] = json!([basis.n_min(), basis.n_max()]);
            summary["final_time"] = json!(last.t);
            summary["final_norm"] = json!(occ.sum());
        }
        KdMode::Scan => {
            let sc = kd.scan.as_ref().ok_or_else(|| Error::config("scan", "missing block"))?;
            let opts = ScanOptions {
                flat_cycles: sc.flat_cycles.clone(),
                steps_per_cycle: kd.steps_per_cycle,
                n_target: sc.n_target,
                frame_energy: None,
            };
            let (basis, scan) = with_cutoff_extension(&basis, kd.extend_step, kd.max_extensions, |b| {
                rabi_scan(b, laser, &opts)
            })?;
            let tracked: Vec<i32> = if cfg.output.track_n.is_empty() {
                vec![0, sc.n_target]
            } else {
                cfg.output.track_n.clone()
            };
            let header: Vec<String> = ["T", "T_over_TL", "flat_cycles", "norm"]
                .into_iter()
                .map(String::from)
                .chain(occupation_columns(&tracked))
                .collect();
            let rows = scan.points.iter().map(|p| {
                [p.interaction_time, p.interaction_time / tl, p.flat_cycles as f64, p.norm]
                    .into_iter()
                    .chain(occupation_values(&p.occupations, &tracked))
                    .collect()
            });
            sink.write("rabi_scan.csv", csv_table(&header, rows).as_bytes())?;
            let (peak, t_peak) = scan.peak();
            summary["mode"] = json!("scan");
            summary["ladder"] = json!([basis.n_min(), basis.n_max()]);
            summary["n_target"] = json!(sc.n_target);
            summary["peak_transfer"] = json!(peak);
            summary["peak_time_over_tl"] = json!(t_peak / tl);
            summary["rabi_period_over_tl"] = match scan.rabi_period() {
                Ok(tr) => json!(tr / tl),
                Err(Error::NoOscillation) => {
                    log::warn!("no Rabi oscillation resolved in the scanned window");
                    serde_json::Value::Null
                }
                Err(e) => return Err(e),
            };
        }
    }
    sink.json("summary.json", &summary)
}

fn run_wkb(kind: ScenarioKind, w: &WkbScenario, sink: &mut Sink) -> Result<()> {
    let p = &w.problem;
    if kind == ScenarioKind::WkbMap {
        let map = wkb_map(p, &w.p_y, &w.p_z)?;
        let mut s = String::from("p_y,p_z,Gamma,rel_prob,flag\n");
        for c in &map.cells {
            let gamma = c.gamma.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_f64(c.p_y),
                fmt_f64(c.p_z),
                gamma,
                fmt_f64(c.rel_prob),
                c.flag.as_str()
            );
        }
        sink.write("wkb_map.csv", s.as_bytes())
    } else {
        let est = most_probable_pz_in(p, w.peak_range.0, w.peak_range.1, w.peak_points)?;
        let c = p.consts.c;
        let record = json!({
            "p_z_star": est.p_z_star,
            "p_kin_entry": est.p_kin_entry,
            "p_kin_exit": est.p_kin_exit,
            "gamma_at_peak": est.gamma_at_peak,
            "keldysh": est.keldysh,
            "x_entry": est.x_i,
            "x_exit": est.x_e,
            "p_z_star_over_ip_c": est.p_z_star * c / p.ip,
            "p_kin_exit_over_ip_c": est.p_kin_exit * c / p.ip,
        });
        sink.json("wkb_peak.json", &record)
    }
}

fn run_bragg(b: &BraggScenario, units: &PhysicalConstants, sink: &mut Sink) -> Result<()> {
    let sol = bragg_solve(b, units)?;
    sink.json("bragg.json", &sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BraggReport {
    pub n_r: i32,
    pub n_l: i32,
    pub photon_ev: f64,
    pub theta_deg: f64,
    pub wavelength: f64,
    pub p_mag: f64,
    pub p_kev: f64,
    pub residual: f64,
}

/// Solving momentum for a Bragg scenario, in atomic units and keV/c.
pub fn bragg_solve(b: &BraggScenario, units: &PhysicalConstants) -> Result<BraggReport> {
    if !(b.photon_ev > 0.0) {
        return Err(Error::InvalidParameter(format!("photon energy must be positive, got {}", b.photon_ev)));
    }
    let lambda = 2.0 * std::f64::consts::PI * units.c / units.omega_from_photon_ev(b.photon_ev);
    let sol = bragg_momentum(b.n_r, b.n_l, b.theta, lambda, units)?;
    Ok(BraggReport {
        n_r: b.n_r,
        n_l: b.n_l,
        photon_ev: b.photon_ev,
        theta_deg: b.theta.to_degrees(),
        wavelength: lambda,
        p_mag: sol.p_mag,
        p_kev: units.momentum_to_kev(sol.p_mag),
        residual: sol.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(fmt_f64(1.0), "1.00000000000000e0");
        assert_eq!(fmt_f64(-0.00125), "-1.25000000000000e-3");
    }

    #[test]
    fn bragg_scenario_writes_json() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("kind = \"bragg\"\n[bragg]\nn_r = 2\nn_l = -1\nphoton_ev = 3100.0\ntheta_deg = 0.4\n").unwrap();
        let rep = run_scenario(&cfg, Some(dir.path())).unwrap();
        assert_eq!(rep.outputs, vec!["bragg.json"]);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("bragg.json")).unwrap()).unwrap();
        assert!((v["p_kev"].as_f64().unwrap() - 176.0).abs() < 0.02 * 176.0);
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config_sha256"].as_str().unwrap(), cfg.source_sha256);
        assert_eq!(cfg.source_sha256.len(), 64);
    }

    #[test]
    fn solver_errors_carry_the_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("kind = \"bragg\"\n[bragg]\nn_r = 1\nn_l = 1\nphoton_ev = 3100.0\n").unwrap();
        let err = run_scenario(&cfg, Some(dir.path())).unwrap_err();
        assert!(err.to_string().starts_with("bragg scenario: "), "{err}");
        assert!(matches!(err.root(), Error::Bragg(_)));
    }
}
