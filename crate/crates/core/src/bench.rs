//! Throughput of the grid propagators against problem size.
//!
//! Each measurement times the step loop only: the field, FFT plans and
//! stencil tables are built beforehand, one untimed warm-up run primes
//! caches, and the reported time is the median over the repetitions.

use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dirac::DiracPropagator;
use crate::error::{Error, Result};
use crate::field::{PairField, SpinorField};
use crate::grid::Grid;
use crate::kg::{KgPropagator, StencilOrder};
use crate::potentials::{Envelope, PotentialSpec};
use crate::units::PhysicalConstants;
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchSolver {
    Dirac,
    Kg,
}

impl BenchSolver {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchSolver::Dirac => "dirac",
            BenchSolver::Kg => "kg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub solver: BenchSolver,
    pub dim: usize,
    /// Points per axis, strictly ascending.
    pub sizes: Vec<usize>,
    pub steps: usize,
    pub repetitions: usize,
    /// Worker counts to sweep; each measurement runs in its own pool.
    pub threads: Vec<usize>,
    /// Box edge length.
    pub extent: f64,
    /// Time step; `None` picks a stable step for each size.
    pub dt: Option<f64>,
    pub consts: PhysicalConstants,
}

impl BenchPlan {
    pub fn new(solver: BenchSolver, dim: usize, sizes: Vec<usize>) -> Self {
        Self {
            solver,
            dim,
            sizes,
            steps: 128,
            repetitions: 5,
            threads: vec![1],
            extent: 40.0,
            dt: None,
            consts: PhysicalConstants::atomic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidParameter(format!("bench dim must be 1 or 2, got {}", self.dim)));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidParameter("bench needs at least one size".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("bench sizes must be strictly ascending".into()));
        }
        if self.steps < 16 {
            return Err(Error::InvalidParameter(format!("bench steps must be at least 16, got {}", self.steps)));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("bench needs at least one repetition".into()));
        }
        if self.threads.is_empty() || self.threads.contains(&0) {
            return Err(Error::InvalidParameter("thread counts must be positive".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("bench dt must be positive, got {dt}")));
            }
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::InvalidParameter(format!("bench extent must be positive, got {}", self.extent)));
        }
        self.consts.validate()
    }

    /// Standing wave with a period of a quarter box, so every step evaluates
    /// a nontrivial vector potential.
    pub fn potential(&self) -> PotentialSpec {
        let k = 8.0 * std::f64::consts::PI / self.extent;
        PotentialSpec::StandingWave {
            e0: [0.0, 0.0, 5.0],
            k: [k, 0.0, 0.0],
            envelope: Envelope::unlimited(),
        }
    }

    /// Time step for a grid: the configured one, or half the free Strang
    /// stability limit of the finest stencil mode, capped at `0.1 hbar / mc^2`.
    pub fn step_for(&self, grid: &Grid) -> f64 {
        if let Some(dt) = self.dt {
            return dt;
        }
        let c = &self.consts;
        let h = grid.spacing();
        let k2 = grid.dim() as f64 * StencilOrder::Fourth.k2_symbol(std::f64::consts::PI / h, h);
        let tkin = c.hbar * c.hbar * k2 / (2.0 * c.mass);
        let limit = c.hbar * (2.0 / (tkin * c.rest_energy())).sqrt();
        (0.5 * limit).min(0.1 * c.hbar / c.rest_energy())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub solver: BenchSolver,
    pub dim: usize,
    pub n: usize,
    pub threads: usize,
    pub median_seconds: f64,
    pub steps_per_second: f64,
    pub points_times_steps_per_second: f64,
    #[serde(skip)]
    pub timings: Vec<f64>,
}

impl BenchRow {
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
}

/// A size that could not be measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchFailure {
    pub n: usize,
    pub threads: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub failures: Vec<BenchFailure>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str =
        "solver,dim,N,threads,median_seconds,steps_per_second,points_times_steps_per_second";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.6e},{:.6e},{:.6e}\n",
                r.solver.as_str(),
                r.dim,
                r.n,
                r.threads,
                r.median_seconds,
                r.steps_per_second,
                r.points_times_steps_per_second
            ));
        }
        s
    }

    /// Log-log slope of median time against point count for one thread count.
    pub fn scaling_slope(&self, threads: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.threads == threads)
            .map(|r| ((r.points() as f64).ln(), r.median_seconds.ln()))
            .collect();
        log_log_slope(&pts)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Median of a nonempty sample; the mean of the two central values for even
/// lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

enum Workload {
    Dirac { prop: DiracPropagator, start: SpinorField },
    Kg { prop: KgPropagator, start: PairField },
}

impl Workload {
    fn build(plan: &BenchPlan, grid: &Grid) -> Result<Self> {
        let dt = plan.step_for(grid);
        // a smooth packet keeps the numbers in range for any step count
        let width = 0.1 * plan.extent;
        let shape = |r: crate::vec3::Vec3| {
            let r2 = r[0] * r[0] + r[2] * r[2];
            Complex64::from_polar((-0.5 * r2 / (width * width)).exp(), 0.5 * r[0])
        };
        Ok(match plan.solver {
            BenchSolver::Dirac => {
                let mut start = SpinorField::try_zeros(*grid)?;
                start.map_points(|i, _| {
                    let z = shape(grid.position(i));
                    [z, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
                });
                Workload::Dirac {
                    prop: DiracPropagator::new(grid, plan.consts, dt, false),
                    start,
                }
            }
            BenchSolver::Kg => {
                let mut start = PairField::try_zeros(*grid)?;
                start.map_points(|i, _| [shape(grid.position(i)), Complex64::new(0.0, 0.0)]);
                Workload::Kg {
                    prop: KgPropagator::new(grid, plan.consts, dt, StencilOrder::Fourth, false),
                    start,
                }
            }
        })
    }

    /// Runs the step loop from a fresh copy of the start field and returns
    /// the elapsed time of the loop alone.
    fn time(&mut self, spec: &PotentialSpec, steps: usize) -> Result<f64> {
        match self {
            Workload::Dirac { prop, start } => {
                let mut psi = start.clone();
                let dt = prop.dt();
                let t0 = Instant::now();
                for s in 0..steps {
                    prop.step(&mut psi, spec, s as f64 * dt);
                }
                let el = t0.elapsed().as_secs_f64();
                finite(psi.is_finite(), steps)?;
                Ok(el)
            }
            Workload::Kg { prop, start } => {
                let mut psi = start.clone();
                let dt = prop.dt();
                let t0 = Instant::now();
                for s in 0..steps {
                    prop.step(&mut psi, spec, s as f64 * dt);
                }
                let el = t0.elapsed().as_secs_f64();
                finite(psi.is_finite(), steps)?;
                Ok(el)
            }
        }
    }
}

fn finite(ok: bool, steps: usize) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite { step: steps, time: f64::NAN })
    }
}

fn measure(plan: &BenchPlan, n: usize, threads: usize) -> Result<BenchRow> {
    let grid = Grid::new(plan.dim, n, plan.extent)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let spec = plan.potential();
    pool.install(|| {
        let mut work = Workload::build(plan, &grid)?;
        work.time(&spec, plan.steps)?;
        let timings = (0..plan.repetitions)
            .map(|_| work.time(&spec, plan.steps))
            .collect::<Result<Vec<_>>>()?;
        let med = median(&timings);
        let sps = plan.steps as f64 / med;
        Ok(BenchRow {
            solver: plan.solver,
            dim: plan.dim,
            n,
            threads,
            median_seconds: med,
            steps_per_second: sps,
            points_times_steps_per_second: sps * grid.len() as f64,
            timings,
        })
    })
}

/// Measures every `(threads, size)` pair of the plan. A size that fails
/// (allocation, non-finite field) is recorded and the sweep continues.
pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport> {
    plan.validate()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &threads in &plan.threads {
        for &n in &plan.sizes {
            match measure(plan, n, threads) {
                Ok(r) => {
                    log::info!(
                        "{} {}-D N={} threads={}: {:.3e} s",
                        plan.solver.as_str(),
                        plan.dim,
                        n,
                        threads,
                        r.median_seconds
                    );
                    rows.push(r);
                }
                Err(e) => {
                    log::warn!("bench size {n} with {threads} threads failed: {e}");
                    failures.push(BenchFailure {
                        n,
                        threads,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(BenchReport { rows, failures })
}

/// Machine description written next to the timing table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchEnvironment {
    pub cpu_model: String,
    pub logical_cores: usize,
    pub os: String,
    pub arch: String,
    pub debug_assertions: bool,
    pub package_version: String,
    /// SHA-256 over the build description fields above.
    pub build_flags_hash: String,
}

pub fn environment() -> BenchEnvironment {
    let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into());
    let logical_cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let os = std::env::consts::OS.to_string();
    let arch = std::env::consts::ARCH.to_string();
    let debug_assertions = cfg!(debug_assertions);
    let package_version = env!("CARGO_PKG_VERSION").to_string();
    let mut h = Sha256::new();
    h.update(format!("{os}|{arch}|debug={debug_assertions}|{package_version}"));
    let build_flags_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    BenchEnvironment {
        cpu_model,
        logical_cores,
        os,
        arch,
        debug_assertions,
        package_version,
        build_flags_hash,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{propagate_dirac, DiracPropagatorConfig};

    #[test]
    fn median_of_odd_and_even_samples() {
        assert_eq!(median(&[5.0, 1.0, 3.0, 2.0, 4.0]), 3.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [8.0f64, 16.0, 32.0]
            .iter()
            .map(|&x| (x.ln(), (3.0 * x.powf(1.1)).ln()))
            .collect();
        assert!((log_log_slope(&pts).unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn plan_validation() {
        let mut p = BenchPlan::new(BenchSolver::Dirac, 1, vec![64, 32]);
        assert!(p.validate().is_err());
        p.sizes = vec![32, 64];
        assert!(p.validate().is_ok());
        p.steps = 15;
        assert!(p.validate().is_err());
    }

    #[test]
    fn reported_median_and_rows() {
        let mut p = BenchPlan::new(BenchSolver::Kg, 1, vec![32, 64]);
        p.steps = 16;
        p.threads = vec![1, 2];
        let rep = run_bench(&p).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.failures.is_empty());
        for r in &rep.rows {
            assert_eq!(r.timings.len(), 5);
            assert_eq!(r.median_seconds, median(&r.timings));
        }
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with(BenchReport::CSV_HEADER));
    }

    #[test]
    fn oversized_grid_fails_alone() {
        let mut p = BenchPlan::new(BenchSolver::Dirac, 2, vec![16, 1 << 31]);
        p.steps = 16;
        p.repetitions = 1;
        let rep = run_bench(&p).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.failures.len(), 1);
        assert_eq!(rep.failures[0].n, 1 << 31);
    }

    #[test]
    fn benchmarked_steps_match_the_propagator() {
        let p = BenchPlan::new(BenchSolver::Dirac, 1, vec![64]);
        let grid = Grid::new(1, 64, p.extent).unwrap();
        let mut w = Workload::build(&p, &grid).unwrap();
        let Workload::Dirac { start, prop } = &mut w else { unreachable!() };
        let mut timed = start.clone();
        for s in 0..32 {
            prop.step(&mut timed, &p.potential(), s as f64 * prop.dt());
        }
        let mut cfg = DiracPropagatorConfig::new(p.step_for(&grid), 32, p.potential());
        cfg.sample_every = 0;
        let (plain, _) = propagate_dirac(start.clone(), &cfg).unwrap();
        assert_eq!(timed, plain);
    }
}
