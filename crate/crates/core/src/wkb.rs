//! Quasi-classical tunneling through a static field barrier.
//!
//! The electron is bound with ionization potential `I_p` and sits in a
//! static field `E0` along `x`; the magnetic field of the laser enters
//! through the canonical momentum `p_z` in the kinetic term
//! `(p_z - q x E0 / c)^2 / 2m`. The WKB exponent
//! `Gamma = (2/hbar) int sqrt(2m [V_eff - E]) dx` over the forbidden region
//! gives the relative ionization probability `exp(-Gamma)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::optimize::{bisect, scan_then_refine_min};
use crate::quadrature::AdaptiveGauss;
use crate::units::PhysicalConstants;
use crate::{Error, Result};

/// Relative tolerance of the `Gamma` quadrature.
const GAMMA_REL_TOL: f64 = 1e-13;
/// Growth factor of the outward bracketing walk.
const WALK_RATIO: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BindingPotential {
    /// `V = -z / sqrt(x^2 + a^2)`.
    SoftCore { z: f64, a: f64 },
    /// `V = 0` on the barrier side of `x = 0` and an impenetrable wall on the
    /// other; the entry point is the wall itself.
    HardWall,
}

impl BindingPotential {
    /// Soft-core default for a given `I_p`: `Z = sqrt(2 I_p)` and
    /// `a = 0.5 / Z` (atomic units), which puts the bottom of the well at
    /// `-2 Z^2 = -4 I_p` so that the bound level lies inside it.
    pub fn default_soft_core(ip: f64) -> Self {
        let z = (2.0 * ip).sqrt();
        BindingPotential::SoftCore { z, a: 0.5 / z }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            BindingPotential::SoftCore { z, a } => -z / (x * x + a * a).sqrt(),
            BindingPotential::HardWall => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnelProblem {
    pub ip: f64,
    pub e0: f64,
    pub potential: BindingPotential,
    pub consts: PhysicalConstants,
    /// Laser angular frequency, used only for the Keldysh parameter.
    pub omega: f64,
}

impl TunnelProblem {
    pub fn new(ip: f64, e0: f64, potential: BindingPotential, consts: PhysicalConstants, omega: f64) -> Result<Self> {
        if !(ip > 0.0 && ip.is_finite()) {
            return Err(Error::InvalidParameter(format!("I_p must be positive, got {ip}")));
        }
        if !(e0 > 0.0 && e0.is_finite()) {
            return Err(Error::InvalidParameter(format!("E0 must be positive, got {e0}")));
        }
        if !(omega >= 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be nonnegative, got {omega}")));
        }
        if let BindingPotential::SoftCore { z, a } = potential {
            if !(z > 0.0 && a > 0.0) {
                return Err(Error::InvalidParameter(format!("soft-core needs z, a > 0, got {z}, {a}")));
            }
        }
        consts.validate()?;
        let p = Self { ip, e0, potential, consts, omega };
        if let Err(Error::OverTheBarrier { .. }) = turning_points(&p, 0.0, 0.0) {
            log::warn!("E0 = {e0} is above the over-the-barrier threshold for I_p = {ip}");
        }
        Ok(p)
    }

    /// `I_p / mc^2` and `E0 / E_a` with the default soft-core binding.
    pub fn from_ratios(ip_over_mc2: f64, e0_over_ea: f64, consts: PhysicalConstants, omega: f64) -> Result<Self> {
        let ip = ip_over_mc2 * consts.rest_energy();
        Self::new(ip, e0_over_ea * consts.field_unit, BindingPotential::default_soft_core(ip), consts, omega)
    }

    /// Unit vector along `x` pointing into the barrier, `-sign(q E0)`.
    fn outward(&self) -> f64 {
        -(self.consts.charge * self.e0).signum()
    }

    fn kinetic_z(&self, x: f64, pz: f64) -> f64 {
        pz - self.consts.charge * x * self.e0 / self.consts.c
    }

    /// `V_eff - E`, positive in the classically forbidden region.
    fn excess(&self, x: f64, py: f64, pz: f64) -> f64 {
        effective_potential(self, x) - energy_curve(self, x, py, pz)
    }

    /// Distance along the barrier direction where the field and kinetic
    /// terms are smallest, i.e. where the kinematic momentum reaches `mc`.
    /// Past it the magnetic term closes every gap again.
    fn walk_limit(&self, pz: f64) -> f64 {
        let c = self.consts.c;
        let m = self.consts.mass;
        let q = self.consts.charge;
        ((pz - m * c) * c / (q * self.e0)).abs()
    }
}

/// `V(x) + q x E0`.
pub fn effective_potential(problem: &TunnelProblem, x: f64) -> f64 {
    problem.potential.value(x) + problem.consts.charge * x * problem.e0
}

/// Position-dependent total energy
/// `-I_p - p_y^2/(2m) - (p_z - q x E0 / c)^2 / (2m)`.
pub fn energy_curve(problem: &TunnelProblem, x: f64, py: f64, pz: f64) -> f64 {
    let m = problem.consts.mass;
    let kz = problem.kinetic_z(x, pz);
    -problem.ip - (py * py + kz * kz) / (2.0 * m)
}

/// Entry and exit points `x_i < x_e` of the forbidden region (ordered along
/// the barrier direction when the field points the other way).
pub fn turning_points(problem: &TunnelProblem, py: f64, pz: f64) -> Result<(f64, f64)> {
    let s = problem.outward();
    let f = |u: f64| problem.excess(s * u, py, pz);
    let limit = problem.walk_limit(pz);
    let (u_entry, start) = match problem.potential {
        BindingPotential::HardWall => (0.0, (problem.ip / problem.e0) * 1e-9),
        BindingPotential::SoftCore { a, .. } => {
            if f(0.0) >= 0.0 {
                return Err(Error::NoBoundRegion { p_y: py, p_z: pz });
            }
            let mut prev = 0.0;
            let mut u = 1e-6 * a;
            loop {
                if u > limit {
                    return Err(Error::OverTheBarrier { p_y: py, p_z: pz });
                }
                if f(u) > 0.0 {
                    break;
                }
                prev = u;
                u *= WALK_RATIO;
            }
            let ui = bisect(f, prev, u, 0.0)?;
            (ui, u)
        }
    };
    if f(start) <= 0.0 && matches!(problem.potential, BindingPotential::HardWall) {
        return Err(Error::OverTheBarrier { p_y: py, p_z: pz });
    }
    let mut prev = start;
    let mut u = start;
    loop {
        if u > limit {
            return Err(Error::NoExit { p_y: py, p_z: pz });
        }
        if f(u) < 0.0 {
            break;
        }
        prev = u;
        u *= WALK_RATIO;
    }
    let ue = bisect(f, prev, u, 0.0)?;
    let (a, b) = (s * u_entry, s * ue);
    Ok((a.min(b), a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierSlice {
    pub p_y: f64,
    pub p_z: f64,
    pub x_i: f64,
    pub x_e: f64,
    pub gamma: f64,
}

/// `Gamma` for one pair of canonical transverse momenta, with the turning
/// points. The substitution `x = x_i + (x_e - x_i) sin^2(s)` removes the
/// square-root zeros at the turning points.
pub fn barrier_slice(problem: &TunnelProblem, py: f64, pz: f64) -> Result<BarrierSlice> {
    let (x_i, x_e) = turning_points(problem, py, pz)?;
    let m = problem.consts.mass;
    let w = x_e - x_i;
    let integrand = |s: f64| {
        let (sn, cs) = s.sin_cos();
        let x = x_i + w * sn * sn;
        let ex = problem.excess(x, py, pz).max(0.0);
        (2.0 * m * ex).sqrt() * 2.0 * w * sn * cs
    };
    let integral = AdaptiveGauss::new(20, GAMMA_REL_TOL).integrate(integrand, 0.0, std::f64::consts::FRAC_PI_2)?;
    Ok(BarrierSlice {
        p_y: py,
        p_z: pz,
        x_i,
        x_e,
        gamma: 2.0 * integral / problem.consts.hbar,
    })
}

pub fn gamma_exponent(problem: &TunnelProblem, py: f64, pz: f64) -> Result<f64> {
    barrier_slice(problem, py, pz).map(|b| b.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    Ok,
    OverTheBarrier,
    NoBoundRegion,
    NoExit,
}

impl CellFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::OverTheBarrier => "over_the_barrier",
            CellFlag::NoBoundRegion => "no_bound_region",
            CellFlag::NoExit => "no_exit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WkbCell {
    pub p_y: f64,
    pub p_z: f64,
    /// `None` for flagged cells.
    pub gamma: Option<f64>,
    /// `exp(-(Gamma - Gamma_min))`; zero for flagged cells.
    pub rel_prob: f64,
    pub flag: CellFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WkbMap {
    /// Row-major over `(p_y, p_z)`, `p_z` fastest.
    pub cells: Vec<WkbCell>,
    pub n_py: usize,
    pub n_pz: usize,
}

impl WkbMap {
    pub fn argmax(&self) -> Option<&WkbCell> {
        self.cells
            .iter()
            .filter(|c| c.flag == CellFlag::Ok)
            .max_by(|a, b| a.rel_prob.total_cmp(&b.rel_prob))
    }

    pub fn row(&self, iy: usize) -> &[WkbCell] {
        &self.cells[iy * self.n_pz..(iy + 1) * self.n_pz]
    }
}

/// Relative probability `exp(-Gamma)` on a `(p_y, p_z)` grid, normalized to
/// a maximum of one. Cells without a tunneling barrier are flagged.
pub fn wkb_map(problem: &TunnelProblem, p_y: &[f64], p_z: &[f64]) -> Result<WkbMap> {
    let pairs: Vec<(f64, f64)> = p_y.iter().flat_map(|&y| p_z.iter().map(move |&z| (y, z))).collect();
    let raw: Vec<(f64, f64, Result<f64>)> = pairs
        .par_iter()
        .map(|&(y, z)| (y, z, gamma_exponent(problem, y, z)))
        .collect();
    let mut cells = Vec::with_capacity(raw.len());
    for (y, z, r) in raw {
        let (gamma, flag) = match r {
            Ok(g) => (Some(g), CellFlag::Ok),
            Err(Error::OverTheBarrier { .. }) => (None, CellFlag::OverTheBarrier),
            Err(Error::NoBoundRegion { .. }) => (None, CellFlag::NoBoundRegion),
            Err(Error::NoExit { .. }) => (None, CellFlag::NoExit),
            Err(e) => return Err(e),
        };
        cells.push(WkbCell { p_y: y, p_z: z, gamma, rel_prob: 0.0, flag });
    }
    let gmin = cells.iter().filter_map(|c| c.gamma).fold(f64::INFINITY, f64::min);
    for c in &mut cells {
        if let Some(g) = c.gamma {
            c.rel_prob = (-(g - gmin)).exp();
        }
    }
    Ok(WkbMap { cells, n_py: p_y.len(), n_pz: p_z.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakEstimate {
    pub p_z_star: f64,
    pub p_kin_entry: f64,
    pub p_kin_exit: f64,
    pub gamma_at_peak: f64,
    pub keldysh: f64,
    pub x_i: f64,
    pub x_e: f64,
}

/// Default `p_z` scan range `[-4 I_p / c, I_p / c]`.
pub fn default_pz_range(problem: &TunnelProblem) -> (f64, f64) {
    let r = problem.ip / problem.consts.c;
    (-4.0 * r, r)
}

/// Most probable canonical `p_z` at `p_y = 0` and the kinematic momenta at
/// the turning points, scanning the default range.
pub fn most_probable_pz(problem: &TunnelProblem) -> Result<PeakEstimate> {
    let (lo, hi) = default_pz_range(problem);
    most_probable_pz_in(problem, lo, hi, 81)
}

pub fn most_probable_pz_in(problem: &TunnelProblem, lo: f64, hi: f64, points: usize) -> Result<PeakEstimate> {
    let objective = |pz: f64| gamma_exponent(problem, 0.0, pz).unwrap_or(f64::INFINITY);
    let (pz, _) = scan_then_refine_min(objective, lo, hi, points, 1e-6)?;
    let slice = barrier_slice(problem, 0.0, pz)?;
    Ok(PeakEstimate {
        p_z_star: pz,
        p_kin_entry: problem.kinetic_z(slice.x_i, pz),
        p_kin_exit: problem.kinetic_z(slice.x_e, pz),
        gamma_at_peak: slice.gamma,
        keldysh: keldysh_parameter(problem),
        x_i: slice.x_i,
        x_e: slice.x_e,
    })
}

/// `gamma = omega sqrt(2 m I_p) / (e E0)`.
pub fn keldysh_parameter(problem: &TunnelProblem) -> f64 {
    problem.omega * (2.0 * problem.consts.mass * problem.ip).sqrt()
        / (problem.consts.elementary_charge() * problem.e0)
}
