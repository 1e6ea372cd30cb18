//! Scenario files.
//!
//! A scenario is a TOML document with a top-level `kind` and one section per
//! block. Parsing is strict: every key must be consumed by the chosen kind,
//! and all problems found in one pass are returned together, each with its
//! dotted key path. The full grammar is in `docs/config.md`.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::algebra::{EnergySign, Spin};
use crate::bench::{BenchPlan, BenchSolver};
use crate::error::{ConfigIssue, Error, Result};
use crate::grid::Grid;
use crate::initial::WavePacket;
use crate::kapitza_dirac::{bragg_momentum, KdLaser, TuneOptions};
use crate::kg::StencilOrder;
use crate::potentials::{Envelope, LaserProfile, PotentialSpec};
use crate::units::{field_from_intensity, PhysicalConstants};
use crate::vec3::{add, cross, norm, scale, Vec3};
use crate::wkb::{default_pz_range, BindingPotential, TunnelProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    PropagateDirac,
    PropagateKg,
    KapitzaDirac,
    WkbMap,
    WkbPeak,
    Bragg,
    Bench,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::PropagateDirac,
        ScenarioKind::PropagateKg,
        ScenarioKind::KapitzaDirac,
        ScenarioKind::WkbMap,
        ScenarioKind::WkbPeak,
        ScenarioKind::Bragg,
        ScenarioKind::Bench,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::PropagateDirac => "propagate-dirac",
            ScenarioKind::PropagateKg => "propagate-kg",
            ScenarioKind::KapitzaDirac => "kapitza-dirac",
            ScenarioKind::WkbMap => "wkb-map",
            ScenarioKind::WkbPeak => "wkb-peak",
            ScenarioKind::Bragg => "bragg",
            ScenarioKind::Bench => "bench",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub units: PhysicalConstants,
    pub output: OutputConfig,
    pub body: ScenarioBody,
    /// SHA-256 of the source text, hex encoded.
    pub source_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioBody {
    Grid(GridScenario),
    KapitzaDirac(KdScenario),
    Wkb(WkbScenario),
    Bragg(BraggScenario),
    Bench(BenchPlan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Output directory; the command line takes precedence.
    pub dir: Option<PathBuf>,
    /// Sampling cadence in steps (grid runs) or recorded steps (mode runs).
    pub every: usize,
    /// Write the final field as `final.fld`.
    pub snapshot: bool,
    /// Observable columns after `t`; `None` writes all of them.
    pub observables: Option<Vec<String>>,
    /// Ladder sites whose per-mode occupations are written.
    pub track_n: Vec<i32>,
}

pub const DIRAC_OBSERVABLES: [&str; 4] = ["norm", "pos_fraction", "x_mean", "z_mean"];
pub const KG_OBSERVABLES: [&str; 4] = ["charge", "density", "x_mean", "z_mean"];

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Packet {
        packet: WavePacket,
        spin: Spin,
        sign: EnergySign,
    },
    PlaneWave {
        momentum: Vec3,
        spin: Spin,
        sign: EnergySign,
    },
    /// A `.fld` snapshot; relative paths are resolved against the config file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScenario {
    pub grid: Grid,
    pub potential: PotentialSpec,
    pub initial: InitialState,
    pub dt: f64,
    pub steps: usize,
    pub t0: f64,
    pub mask: bool,
    pub stencil_order: StencilOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdMode {
    Evolve,
    Scan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdScan {
    pub flat_cycles: Vec<u64>,
    pub n_target: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdScenario {
    pub mode: KdMode,
    pub laser: KdLaser,
    /// Electron momentum before any resonance tuning.
    pub momentum: Vec3,
    pub tune: Option<TuneOptions>,
    pub n_min: i32,
    pub n_max: i32,
    /// Sites added on each side after a cutoff overflow.
    pub extend_step: i32,
    pub max_extensions: usize,
    pub steps_per_cycle: usize,
    pub scan: Option<KdScan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WkbScenario {
    pub problem: TunnelProblem,
    pub p_y: Vec<f64>,
    pub p_z: Vec<f64>,
    pub peak_range: (f64, f64),
    pub peak_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BraggScenario {
    pub n_r: i32,
    pub n_l: i32,
    pub photon_ev: f64,
    /// Radians.
    pub theta: f64,
}

impl ScenarioConfig {
    /// Resolves relative input paths against `base` (the config file's
    /// directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        if let ScenarioBody::Grid(g) = &mut self.body {
            if let InitialState::File(p) = &mut g.initial {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if let Some(d) = &mut self.output.dir {
            if d.is_relative() {
                *d = base.join(&*d);
            }
        }
    }

    /// Selects the Kapitza-Dirac sub-command; scanning needs a `[scan]`
    /// block.
    pub fn set_kd_mode(&mut self, mode: KdMode) -> Result<()> {
        match &mut self.body {
            ScenarioBody::KapitzaDirac(kd) => {
                if mode == KdMode::Scan && kd.scan.is_none() {
                    return Err(Error::config("scan", "missing block required by `kapitza-dirac scan`"));
                }
                kd.mode = mode;
                Ok(())
            }
            _ => Err(Error::config(
                "kind",
                format!("`{}` is not a kapitza-dirac scenario", self.kind.as_str()),
            )),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

/// Parses and validates a scenario. Every problem found is reported.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    let issues = Issues::default();
    let root = Section::new("", &table, &issues);
    let cfg = read_scenario(&root, &issues);
    root.finish();
    let list = issues.0.into_inner();
    match cfg {
        Some(mut c) if list.is_empty() => {
            c.source_sha256 = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
            Ok(c)
        }
        _ if !list.is_empty() => Err(Error::Config(list)),
        _ => Err(Error::config("<document>", "invalid scenario")),
    }
}

#[derive(Default)]
struct Issues(RefCell<Vec<ConfigIssue>>);

impl Issues {
    fn push(&self, key: impl Into<String>, reason: impl Into<String>) {
        self.0.borrow_mut().push(ConfigIssue {
            key: key.into(),
            reason: reason.into(),
        });
    }

    /// Records a validation error from a constructor against `key`.
    fn check<T>(&self, key: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Config(list)) => {
                self.0.borrow_mut().extend(list);
                None
            }
            Err(Error::InvalidParameter(m)) | Err(Error::InvalidGrid(m)) => {
                self.push(key, m);
                None
            }
            Err(e) => {
                self.push(key, e.to_string());
                None
            }
        }
    }
}

/// One TOML table with consumption tracking.
struct Section<'a> {
    path: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
    issues: &'a Issues,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: &'a Table, issues: &'a Issues) -> Self {
        Self {
            path: path.to_string(),
            table,
            used: RefCell::new(BTreeSet::new()),
            issues,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn issue(&self, k: &str, reason: impl Into<String>) {
        self.issues.push(self.key(k), reason);
    }

    fn has(&self, k: &str) -> bool {
        self.table.contains_key(k)
    }

    fn raw(&self, k: &str) -> Option<&'a Value> {
        let v = self.table.get(k);
        if v.is_some() {
            self.used.borrow_mut().insert(k.to_string());
        }
        v
    }

    fn f64(&self, k: &str) -> Option<f64> {
        let v = self.raw(k)?;
        match as_number(v) {
            Some(x) if x.is_finite() => Some(x),
            Some(_) => {
                self.issue(k, "must be finite");
                None
            }
            None => {
                self.issue(k, format!("expected a number, found {}", v.type_str()));
                None
            }
        }
    }

    fn req_f64(&self, k: &str) -> Option<f64> {
        if !self.has(k) {
            self.issue(k, "missing required key");
            return None;
        }
        self.f64(k)
    }

    fn positive(&self, k: &str) -> Option<f64> {
        let x = self.f64(k)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.issue(k, format!("must be positive, got {x}"));
            None
        }
    }

    fn i64(&self, k: &str) -> Option<i64> {
        let v = self.raw(k)?;
        match v {
            Value::Integer(i) => Some(*i),
            _ => {
                self.issue(k, format!("expected an integer, found {}", v.type_str()));
                None
            }
        }
    }

    fn i32(&self, k: &str) -> Option<i32> {
        let i = self.i64(k)?;
        i32::try_from(i).ok().or_else(|| {
            self.issue(k, format!("{i} is out of range"));
            None
        })
    }

    fn usize(&self, k: &str) -> Option<usize> {
        let i = self.i64(k)?;
        usize::try_from(i).ok().or_else(|| {
            self.issue(k, format!("must be nonnegative, got {i}"));
            None
        })
    }

    fn bool(&self, k: &str) -> Option<bool> {
        let v = self.raw(k)?;
        v.as_bool().or_else(|| {
            self.issue(k, format!("expected a boolean, found {}", v.type_str()));
            None
        })
    }

    fn str(&self, k: &str) -> Option<&'a str> {
        let v = self.raw(k)?;
        v.as_str().or_else(|| {
            self.issue(k, format!("expected a string, found {}", v.type_str()));
            None
        })
    }

    fn req_str(&self, k: &str) -> Option<&'a str> {
        if !self.has(k) {
            self.issue(k, "missing required key");
            return None;
        }
        self.str(k)
    }

    fn f64_list(&self, k: &str) -> Option<Vec<f64>> {
        let v = self.raw(k)?;
        let Some(arr) = v.as_array() else {
            self.issue(k, format!("expected an array of numbers, found {}", v.type_str()));
            return None;
        };
        let out: Option<Vec<f64>> = arr.iter().map(as_number).collect();
        if out.is_none() {
            self.issue(k, "expected an array of numbers");
        }
        out
    }

    fn int_list(&self, k: &str) -> Option<Vec<i64>> {
        let v = self.raw(k)?;
        let Some(arr) = v.as_array() else {
            self.issue(k, format!("expected an array of integers, found {}", v.type_str()));
            return None;
        };
        let out: Option<Vec<i64>> = arr.iter().map(|x| x.as_integer()).collect();
        if out.is_none() {
            self.issue(k, "expected an array of integers");
        }
        out
    }

    fn vec3(&self, k: &str) -> Option<Vec3> {
        let v = self.f64_list(k)?;
        match v.len() {
            3 => Some([v[0], v[1], v[2]]),
            n => {
                self.issue(k, format!("expected 3 components, found {n}"));
                None
            }
        }
    }

    /// Reads at most one of `keys`; naming several is a conflict. Returns the
    /// key that was present and its value.
    fn exclusive<T>(&self, keys: &[&'static str], read: impl Fn(&str) -> Option<T>) -> Option<(&'static str, T)> {
        let present: Vec<&str> = keys.iter().copied().filter(|k| self.has(k)).collect();
        if present.len() > 1 {
            for k in &present {
                self.raw(k);
            }
            self.issue(
                present[1],
                format!("conflicts with `{}`: give exactly one of {}", self.key(present[0]), keys.join(", ")),
            );
            return None;
        }
        let k = present.first()?;
        read(k).map(|v| (keys[keys.iter().position(|x| x == k).unwrap()], v))
    }

    fn sub(&self, k: &str) -> Option<Section<'a>> {
        let v = self.raw(k)?;
        match v.as_table() {
            Some(t) => Some(Section::new(&self.key(k), t, self.issues)),
            None => {
                self.issue(k, format!("expected a table, found {}", v.type_str()));
                None
            }
        }
    }

    fn req_sub(&self, k: &str, why: &str) -> Option<Section<'a>> {
        if !self.has(k) {
            self.issue(k, format!("missing block required by {why}"));
            return None;
        }
        self.sub(k)
    }

    /// Reports every key that nothing consumed.
    fn finish(&self) {
        let used = self.used.borrow();
        for k in self.table.keys() {
            if !used.contains(k) {
                let what = if self.table[k].is_table() {
                    "unknown section"
                } else {
                    "unknown key"
                };
                self.issue(k, what);
            }
        }
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn read_scenario(root: &Section, issues: &Issues) -> Option<ScenarioConfig> {
    let kind_name = root.req_str("kind");
    let kind = kind_name.and_then(|k| {
        ScenarioKind::parse(k).or_else(|| {
            let names: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
            root.issue("kind", format!("unknown scenario kind `{k}`; expected one of {}", names.join(", ")));
            None
        })
    });
    let seed = root.i64("seed").map(|s| s as u64).unwrap_or(0);
    let units = read_units(root, issues);
    let kind = kind?;
    let output = read_output(root, kind);
    let body = match kind {
        ScenarioKind::PropagateDirac | ScenarioKind::PropagateKg => read_grid_scenario(root, kind, &units, issues).map(ScenarioBody::Grid),
        ScenarioKind::KapitzaDirac => read_kd(root, &units, issues).map(ScenarioBody::KapitzaDirac),
        ScenarioKind::WkbMap | ScenarioKind::WkbPeak => read_wkb(root, kind, &units, issues).map(ScenarioBody::Wkb),
        ScenarioKind::Bragg => read_bragg(root).map(ScenarioBody::Bragg),
        ScenarioKind::Bench => read_bench(root, &units, issues).map(ScenarioBody::Bench),
    };
    Some(ScenarioConfig {
        kind,
        seed,
        units,
        output: output?,
        body: body?,
        source_sha256: String::new(),
    })
}

fn read_units(root: &Section, issues: &Issues) -> PhysicalConstants {
    let mut u = PhysicalConstants::atomic();
    let Some(s) = root.sub("units") else { return u };
    if let Some(v) = s.f64("hbar") {
        u.hbar = v;
    }
    if let Some(v) = s.f64("mass") {
        u.mass = v;
    }
    if let Some(v) = s.f64("charge") {
        u.charge = v;
    }
    if let Some(v) = s.f64("c") {
        u.c = v;
    }
    if let Some(v) = s.f64("field_unit") {
        u.field_unit = v;
    }
    s.finish();
    issues.check("units", u.validate());
    u
}

fn read_output(root: &Section, kind: ScenarioKind) -> Option<OutputConfig> {
    let mut out = OutputConfig {
        dir: None,
        every: match kind {
            ScenarioKind::KapitzaDirac => 256,
            _ => 1,
        },
        snapshot: matches!(kind, ScenarioKind::PropagateDirac | ScenarioKind::PropagateKg),
        observables: None,
        track_n: Vec::new(),
    };
    let Some(s) = root.sub("output") else { return Some(out) };
    out.dir = s.str("dir").map(PathBuf::from);
    let grid_kind = matches!(kind, ScenarioKind::PropagateDirac | ScenarioKind::PropagateKg);
    let mut ok = true;
    if grid_kind || kind == ScenarioKind::KapitzaDirac {
        if let Some(e) = s.usize("every") {
            if e == 0 {
                s.issue("every", "must be at least 1");
                ok = false;
            }
            out.every = e;
        }
    }
    if grid_kind {
        if let Some(b) = s.bool("snapshot") {
            out.snapshot = b;
        }
        if s.has("observables") {
            let allowed: &[&str] = if kind == ScenarioKind::PropagateDirac {
                &DIRAC_OBSERVABLES
            } else {
                &KG_OBSERVABLES
            };
            let v = s.raw("observables").and_then(|v| v.as_array());
            let names: Option<Vec<String>> =
                v.and_then(|a| a.iter().map(|x| x.as_str().map(str::to_string)).collect());
            match names {
                Some(names) => {
                    for n in &names {
                        if !allowed.contains(&n.as_str()) {
                            s.issue("observables", format!("unknown observable `{n}`; expected any of {}", allowed.join(", ")));
                            ok = false;
                        }
                    }
                    out.observables = Some(names);
                }
                None => {
                    s.issue("observables", "expected an array of strings");
                    ok = false;
                }
            }
        }
    }
    if kind == ScenarioKind::KapitzaDirac {
        if let Some(v) = s.int_list("track_n") {
            out.track_n = v.into_iter().map(|x| x as i32).collect();
        }
    }
    s.finish();
    ok.then_some(out)
}

fn read_grid(root: &Section, why: &str, issues: &Issues) -> Option<Grid> {
    let s = root.req_sub("grid", why)?;
    let dim = s.usize("dim").unwrap_or(1);
    let n = s.usize("n");
    if !s.has("n") {
        s.issue("n", "missing required key");
    }
    let extent = s.req_f64("extent");
    s.finish();
    issues.check("grid", Grid::new(dim, n?, extent?))
}

/// Field magnitude from `E0`, `E0_over_Ea` or `intensity_w_cm2`.
fn read_amplitude(s: &Section, units: &PhysicalConstants, from_intensity: fn(f64) -> f64) -> Option<f64> {
    let (key, v) = s.exclusive(&["E0", "E0_over_Ea", "intensity_w_cm2"], |k| s.f64(k)).or_else(|| {
        if !(s.has("E0") || s.has("E0_over_Ea") || s.has("intensity_w_cm2")) {
            s.issue("E0", "missing field strength: give one of E0, E0_over_Ea, intensity_w_cm2");
        }
        None
    })?;
    Some(match key {
        "E0" => v,
        "E0_over_Ea" => v * units.field_unit,
        _ => {
            if v < 0.0 {
                s.issue(key, "intensity must be nonnegative");
                return None;
            }
            from_intensity(v) * units.field_unit
        }
    })
}

fn unit(s: &Section, k: &str, default: Vec3) -> Option<Vec3> {
    let v = if s.has(k) { s.vec3(k)? } else { default };
    let n = norm(v);
    if n > 0.0 {
        Some(scale(v, 1.0 / n))
    } else {
        s.issue(k, "must be a nonzero vector");
        None
    }
}

fn envelope(s: &Section, period: f64) -> Option<Envelope> {
    if !s.has("ramp_cycles") && !s.has("flat_cycles") {
        return Some(Envelope::unlimited());
    }
    let ramp = s.f64("ramp_cycles").unwrap_or(0.0);
    let flat = if s.has("flat_cycles") { s.f64("flat_cycles")? } else { f64::INFINITY };
    match Envelope::new(ramp, flat, period) {
        Ok(e) => Some(e),
        Err(e) => {
            s.issue("ramp_cycles", e.to_string());
            None
        }
    }
}

fn read_potential_term(s: &Section, units: &PhysicalConstants) -> Option<PotentialSpec> {
    let ty = s.req_str("type")?;
    let spec = match ty {
        "vacuum" => Some(PotentialSpec::vacuum()),
        "standing-wave" => {
            let pol = unit(s, "polarization", [0.0, 0.0, 1.0]);
            let amp = read_amplitude(s, units, crate::kapitza_dirac::standing_wave_amplitude);
            let k = match (s.has("k"), s.has("photon_ev")) {
                (true, true) => {
                    s.raw("k");
                    s.raw("photon_ev");
                    s.issue("photon_ev", format!("conflicts with `{}`: give exactly one of k, photon_ev", s.key("k")));
                    None
                }
                (true, false) => {
                    if s.has("direction") {
                        s.raw("direction");
                        s.issue("direction", "conflicts with `k`, which already fixes the direction");
                    }
                    s.vec3("k")
                }
                (false, true) => {
                    let ev = s.positive("photon_ev");
                    let dir = unit(s, "direction", [1.0, 0.0, 0.0]);
                    Some(scale(dir?, units.omega_from_photon_ev(ev?) / units.c))
                }
                (false, false) => {
                    s.issue("k", "missing wave vector: give k or photon_ev");
                    None
                }
            };
            let k = k?;
            let kn = norm(k);
            if !(kn > 0.0) {
                s.issue("k", "must be nonzero");
                return None;
            }
            let env = envelope(s, 2.0 * PI / (units.c * kn));
            Some(PotentialSpec::StandingWave {
                e0: scale(pol?, amp?),
                k,
                envelope: env?,
            })
        }
        "ef-gauge-laser" => {
            let pol = unit(s, "polarization", [0.0, 0.0, 1.0]);
            let dir = unit(s, "direction", [1.0, 0.0, 0.0]);
            let amp = read_amplitude(s, units, field_from_intensity);
            let omega = match s.exclusive(&["omega", "photon_ev"], |k| s.positive(k)) {
                Some(("omega", w)) => Some(w),
                Some((_, ev)) => Some(units.omega_from_photon_ev(ev)),
                None => {
                    if !s.has("omega") && !s.has("photon_ev") {
                        s.issue("omega", "missing frequency: give omega or photon_ev");
                    }
                    None
                }
            };
            let phase = s.f64("phase").unwrap_or(0.0);
            let omega = omega?;
            let env = if s.has("ramp_cycles") || s.has("flat_cycles") {
                Some(envelope(s, 2.0 * PI / omega)?)
            } else {
                None
            };
            let (pol, dir) = (pol?, dir?);
            if cross(pol, dir) == [0.0; 3] {
                s.issue("polarization", "must not be parallel to direction");
                return None;
            }
            Some(PotentialSpec::EfGaugeLaser {
                profile: LaserProfile {
                    e0: scale(pol, amp?),
                    omega,
                    phase,
                    envelope: env,
                },
                k_hat: dir,
            })
        }
        "soft-core" => {
            let z = s.req_f64("z");
            let a = s.req_f64("a");
            Some(PotentialSpec::SoftCore { z: z?, a: a? })
        }
        "static-uniform" => {
            let pol = unit(s, "direction", [0.0, 0.0, 1.0]);
            let amp = read_amplitude(s, units, field_from_intensity);
            Some(PotentialSpec::StaticUniform { e0: scale(pol?, amp?) })
        }
        other => {
            s.issue(
                "type",
                format!("unknown potential `{other}`; expected vacuum, standing-wave, ef-gauge-laser, soft-core or static-uniform"),
            );
            None
        }
    };
    s.finish();
    let spec = spec?;
    s.issues.check(&s.path, spec.validate())?;
    Some(spec)
}

fn read_potential(root: &Section, units: &PhysicalConstants) -> Option<PotentialSpec> {
    let Some(v) = root.raw("potential") else {
        root.issue("potential", "missing block; use type = \"vacuum\" for free propagation");
        return None;
    };
    match v {
        Value::Table(t) => read_potential_term(&Section::new("potential", t, root.issues), units),
        Value::Array(items) => {
            let mut parts = Vec::new();
            let mut ok = true;
            for (i, item) in items.iter().enumerate() {
                let path = format!("potential[{i}]");
                match item.as_table() {
                    Some(t) => match read_potential_term(&Section::new(&path, t, root.issues), units) {
                        Some(p) => parts.push(p),
                        None => ok = false,
                    },
                    None => {
                        root.issues.push(path, "expected a table");
                        ok = false;
                    }
                }
            }
            ok.then_some(PotentialSpec::Sum(parts))
        }
        other => {
            root.issue("potential", format!("expected a table or array of tables, found {}", other.type_str()));
            None
        }
    }
}

fn read_spin(s: &Section) -> Option<Spin> {
    match s.str("spin").unwrap_or("up") {
        "up" => Some(Spin::Up),
        "down" => Some(Spin::Down),
        other => {
            s.issue("spin", format!("expected \"up\" or \"down\", got \"{other}\""));
            None
        }
    }
}

fn read_sign(s: &Section, key: &str) -> Option<EnergySign> {
    match s.str(key).unwrap_or("positive") {
        "positive" => Some(EnergySign::Positive),
        "negative" => Some(EnergySign::Negative),
        other => {
            s.issue(key, format!("expected \"positive\" or \"negative\", got \"{other}\""));
            None
        }
    }
}

fn read_initial(root: &Section, kind: ScenarioKind) -> Option<InitialState> {
    let why = kind.as_str();
    let s = root.req_sub("initial", why)?;
    let dirac = kind == ScenarioKind::PropagateDirac;
    let sign_key = if dirac { "energy_sign" } else { "charge_sign" };
    let spin = if dirac {
        read_spin(&s)
    } else {
        Some(Spin::Up)
    };
    let init = match s.req_str("type")? {
        "gaussian" => {
            let center = if s.has("center") { s.vec3("center") } else { Some([0.0; 3]) };
            let momentum = if s.has("momentum") { s.vec3("momentum") } else { Some([0.0; 3]) };
            let width = s.req_f64("width");
            let sign = read_sign(&s, sign_key);
            Some(InitialState::Packet {
                packet: WavePacket {
                    center: center?,
                    width: width?,
                    momentum: momentum?,
                },
                spin: spin?,
                sign: sign?,
            })
        }
        "plane-wave" => {
            let momentum = if s.has("momentum") { s.vec3("momentum") } else { Some([0.0; 3]) };
            let sign = read_sign(&s, sign_key);
            Some(InitialState::PlaneWave {
                momentum: momentum?,
                spin: spin?,
                sign: sign?,
            })
        }
        "file" => {
            let path = s.req_str("path");
            path.map(|p| InitialState::File(PathBuf::from(p)))
        }
        other => {
            s.issue("type", format!("unknown initial state `{other}`; expected gaussian, plane-wave or file"));
            None
        }
    };
    s.finish();
    init
}

fn read_grid_scenario(root: &Section, kind: ScenarioKind, units: &PhysicalConstants, issues: &Issues) -> Option<GridScenario> {
    let why = kind.as_str();
    let grid = read_grid(root, why, issues);
    let potential = read_potential(root, units);
    let initial = read_initial(root, kind);
    let prop = root.req_sub("propagator", why)?;
    let dt = prop.req_f64("dt").and_then(|dt| {
        if dt > 0.0 {
            Some(dt)
        } else {
            prop.issue("dt", format!("must be positive, got {dt}"));
            None
        }
    });
    let steps = prop.usize("steps");
    if !prop.has("steps") {
        prop.issue("steps", "missing required key");
    }
    let t0 = prop.f64("t0").unwrap_or(0.0);
    let mask = prop.bool("mask").unwrap_or(false);
    let stencil_order = if kind == ScenarioKind::PropagateKg {
        match prop.usize("stencil_order") {
            Some(o) => issues.check("propagator.stencil_order", StencilOrder::from_int(o as u32)),
            None => Some(StencilOrder::default()),
        }
    } else {
        Some(StencilOrder::default())
    };
    prop.finish();
    Some(GridScenario {
        grid: grid?,
        potential: potential?,
        initial: initial?,
        dt: dt?,
        steps: steps?,
        t0,
        mask,
        stencil_order: stencil_order?,
    })
}

fn read_kd(root: &Section, units: &PhysicalConstants, issues: &Issues) -> Option<KdScenario> {
    let why = "kapitza-dirac";
    let laser = root.req_sub("laser", why).and_then(|s| {
        let photon_ev = s.req_f64("photon_ev");
        let intensity = s.exclusive(&["intensity_w_cm2", "E0", "E0_over_Ea"], |k| s.f64(k)).or_else(|| {
            if !(s.has("intensity_w_cm2") || s.has("E0") || s.has("E0_over_Ea")) {
                s.issue("intensity_w_cm2", "missing field strength: give one of intensity_w_cm2, E0, E0_over_Ea");
            }
            None
        });
        let pol = unit(&s, "polarization", [0.0, 0.0, 1.0]);
        let dir = unit(&s, "direction", [1.0, 0.0, 0.0]);
        let ramp = s.f64("ramp_cycles").unwrap_or(20.0);
        let flat = s.f64("flat_cycles").unwrap_or(0.0);
        s.finish();
        let (key, value) = intensity?;
        let (photon_ev, pol, dir) = (photon_ev?, pol?, dir?);
        let amp = match key {
            "intensity_w_cm2" => crate::kapitza_dirac::standing_wave_amplitude(value) * units.field_unit,
            "E0" => value,
            _ => value * units.field_unit,
        };
        let omega = units.omega_from_photon_ev(photon_ev);
        let built = Envelope::new(ramp, flat, 2.0 * PI / omega)
            .and_then(|env| KdLaser::new(scale(pol, amp), scale(dir, omega / units.c), env));
        issues.check("laser", built)
    });
    let electron = root.req_sub("electron", why);
    let ladder = root.sub("ladder");
    let prop = root.sub("propagator");
    let scan = root.sub("scan");

    let mut tune = None;
    let momentum = electron.and_then(|s| {
        let theta = s.f64("theta_deg").unwrap_or(0.0).to_radians();
        let mag = s.exclusive(&["p_kev", "p_mag", "bragg"], |k| match k {
            "p_kev" => s.positive(k).map(|v| units.momentum_from_kev(v)),
            "p_mag" => s.positive(k),
            _ => {
                let orders = s.int_list(k)?;
                if orders.len() != 2 {
                    s.issue(k, "expected [n_r, n_l]");
                    return None;
                }
                let l = laser.as_ref()?;
                let lambda = 2.0 * PI / norm(l.k);
                issues
                    .check(&s.key(k), bragg_momentum(orders[0] as i32, orders[1] as i32, theta, lambda, units))
                    .map(|b| b.p_mag)
            }
        });
        if mag.is_none() && !(s.has("p_kev") || s.has("p_mag") || s.has("bragg")) {
            s.issue("p_mag", "missing momentum: give one of p_kev, p_mag, bragg");
        }
        if s.bool("tune").unwrap_or(false) {
            tune = Some(TuneOptions {
                half_width: s.positive("tune_half_width").unwrap_or(1.0),
                points: s.usize("tune_points").unwrap_or(41),
                steps_per_cycle: 0,
                n_target: s.i32("tune_target").unwrap_or(0),
            });
        } else {
            for k in ["tune_half_width", "tune_points", "tune_target"] {
                if s.has(k) {
                    s.raw(k);
                    s.issue(k, "only used with tune = true");
                }
            }
        }
        s.finish();
        let (_, p) = mag?;
        let l = laser.as_ref()?;
        // theta tilts p from the laser axis towards the polarization
        let khat = scale(l.k, 1.0 / norm(l.k));
        let ehat = if norm(l.e) > 0.0 { scale(l.e, 1.0 / norm(l.e)) } else { [0.0, 0.0, 1.0] };
        Some(add(scale(khat, p * theta.cos()), scale(ehat, p * theta.sin())))
    });

    let (mut n_min, mut n_max, mut extend_step, mut max_extensions) = (-8, 12, 2, 4);
    if let Some(s) = &ladder {
        n_min = s.i32("n_min").unwrap_or(n_min);
        n_max = s.i32("n_max").unwrap_or(n_max);
        extend_step = s.i32("extend_step").unwrap_or(extend_step);
        max_extensions = s.usize("max_extensions").unwrap_or(max_extensions);
        if !(n_min <= 0 && n_max >= 0) {
            s.issue("n_min", "ladder must contain n = 0");
        }
        if extend_step < 1 {
            s.issue("extend_step", "must be at least 1");
        }
        s.finish();
    }
    let mut steps_per_cycle = 256;
    if let Some(s) = &prop {
        steps_per_cycle = s.usize("steps_per_cycle").unwrap_or(steps_per_cycle);
        if steps_per_cycle < 4 {
            s.issue("steps_per_cycle", "must be at least 4");
        }
        s.finish();
    }
    let scan = scan.and_then(|s| {
        let lo = s.usize("flat_min").unwrap_or(0);
        let hi = s.usize("flat_max");
        if !s.has("flat_max") {
            s.issue("flat_max", "missing required key");
        }
        let step = s.usize("flat_step").unwrap_or(50);
        let n_target = s.i32("n_target");
        if !s.has("n_target") {
            s.issue("n_target", "missing required key");
        }
        s.finish();
        let (hi, n_target) = (hi?, n_target?);
        if step == 0 || hi < lo {
            s.issue("flat_step", "need flat_step >= 1 and flat_max >= flat_min");
            return None;
        }
        if n_target == 0 {
            s.issue("n_target", "must be nonzero");
            return None;
        }
        Some(KdScan {
            flat_cycles: (lo..=hi).step_by(step).map(|f| f as u64).collect(),
            n_target,
        })
    });
    let scan_present = root.has("scan");
    if scan_present && scan.is_none() {
        return None;
    }
    if let Some(t) = &mut tune {
        t.steps_per_cycle = steps_per_cycle;
        match &scan {
            Some(sc) if t.n_target == 0 => t.n_target = sc.n_target,
            Some(sc) if t.n_target != sc.n_target => {
                issues.push("electron.tune_target", format!("conflicts with `scan.n_target` = {}", sc.n_target));
                return None;
            }
            None if t.n_target == 0 => {
                issues.push("electron.tune_target", "tuning needs a nonzero target site here or in [scan]");
                return None;
            }
            _ => {}
        }
    }
    Some(KdScenario {
        mode: if scan.is_some() { KdMode::Scan } else { KdMode::Evolve },
        laser: laser?,
        momentum: momentum?,
        tune,
        n_min,
        n_max,
        extend_step,
        max_extensions,
        steps_per_cycle,
        scan,
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn read_axis(s: &Section, name: &str, default: (f64, f64), default_points: usize) -> Option<Vec<f64>> {
    let lo = s.f64(&format!("{name}_min")).unwrap_or(default.0);
    let hi = s.f64(&format!("{name}_max")).unwrap_or(default.1);
    let n = s.usize(&format!("{name}_points")).unwrap_or(default_points);
    if n == 0 || (n > 1 && !(hi > lo)) {
        s.issue(&format!("{name}_points"), format!("need at least one point and {name}_max > {name}_min"));
        return None;
    }
    Some(linspace(lo, hi, n))
}

fn read_wkb(root: &Section, kind: ScenarioKind, units: &PhysicalConstants, issues: &Issues) -> Option<WkbScenario> {
    let s = root.req_sub("tunnel", kind.as_str())?;
    let ip = match s.exclusive(&["ip_over_mc2", "ip"], |k| s.positive(k)) {
        Some(("ip", v)) => Some(v),
        Some((_, r)) => Some(r * units.rest_energy()),
        None => {
            if !(s.has("ip") || s.has("ip_over_mc2")) {
                s.issue("ip", "missing ionization potential: give ip or ip_over_mc2");
            }
            None
        }
    };
    let e0 = read_amplitude(&s, units, field_from_intensity);
    let omega = s.f64("omega").unwrap_or(0.057);
    let potential = match s.str("potential").unwrap_or("soft-core") {
        "soft-core" => ip.map(|ip| {
            let BindingPotential::SoftCore { z, a } = BindingPotential::default_soft_core(ip) else { unreachable!() };
            BindingPotential::SoftCore {
                z: s.f64("z").unwrap_or(z),
                a: s.f64("a").unwrap_or(a),
            }
        }),
        "hard-wall" => {
            for k in ["z", "a"] {
                if s.has(k) {
                    s.raw(k);
                    s.issue(k, "not used by the hard-wall potential");
                }
            }
            Some(BindingPotential::HardWall)
        }
        other => {
            s.issue("potential", format!("unknown binding potential `{other}`; expected soft-core or hard-wall"));
            None
        }
    };
    s.finish();
    let problem = issues.check("tunnel", TunnelProblem::new(ip?, e0?, potential?, *units, omega))?;
    let default = default_pz_range(&problem);
    let (mut p_y, mut p_z) = (vec![0.0], linspace(default.0, default.1, 401));
    let (mut peak_range, mut peak_points) = (default, 81);
    if kind == ScenarioKind::WkbMap {
        if let Some(m) = root.sub("map") {
            p_y = read_axis(&m, "py", (0.0, 0.0), 1)?;
            p_z = read_axis(&m, "pz", default, 401)?;
            m.finish();
        }
    } else if let Some(m) = root.sub("peak") {
        peak_range = (m.f64("pz_min").unwrap_or(default.0), m.f64("pz_max").unwrap_or(default.1));
        peak_points = m.usize("points").unwrap_or(peak_points);
        m.finish();
        if !(peak_range.1 > peak_range.0) || peak_points < 3 {
            m.issue("points", "need pz_max > pz_min and at least 3 points");
            return None;
        }
    }
    Some(WkbScenario {
        problem,
        p_y,
        p_z,
        peak_range,
        peak_points,
    })
}

fn read_bragg(root: &Section) -> Option<BraggScenario> {
    let s = root.req_sub("bragg", "bragg")?;
    let n_r = s.i32("n_r");
    let n_l = s.i32("n_l");
    for k in ["n_r", "n_l"] {
        if !s.has(k) {
            s.issue(k, "missing required key");
        }
    }
    let photon_ev = s.req_f64("photon_ev");
    let theta = s.f64("theta_deg").unwrap_or(0.0).to_radians();
    s.finish();
    Some(BraggScenario {
        n_r: n_r?,
        n_l: n_l?,
        photon_ev: photon_ev?,
        theta,
    })
}

fn read_bench(root: &Section, units: &PhysicalConstants, issues: &Issues) -> Option<BenchPlan> {
    let s = root.req_sub("bench", "bench")?;
    let solver = match s.req_str("solver") {
        Some("dirac") => Some(BenchSolver::Dirac),
        Some("kg") => Some(BenchSolver::Kg),
        Some(other) => {
            s.issue("solver", format!("expected \"dirac\" or \"kg\", got \"{other}\""));
            None
        }
        None => None,
    };
    let dim = s.usize("dim").unwrap_or(1);
    let sizes = s.int_list("sizes").map(|v| v.into_iter().map(|x| x.max(0) as usize).collect::<Vec<_>>());
    if !s.has("sizes") {
        s.issue("sizes", "missing required key");
    }
    let mut plan = BenchPlan::new(solver?, dim, sizes?);
    plan.steps = s.usize("steps").unwrap_or(plan.steps);
    plan.repetitions = s.usize("repetitions").unwrap_or(plan.repetitions);
    if let Some(t) = s.int_list("threads") {
        plan.threads = t.into_iter().map(|x| x.max(0) as usize).collect();
    }
    plan.extent = s.f64("extent").unwrap_or(plan.extent);
    plan.dt = s.f64("dt");
    plan.consts = *units;
    s.finish();
    issues.check("bench", plan.validate())?;
    Some(plan)
}
