//! Fourier split-operator propagation of the time-dependent Dirac equation.
//!
//! The Hamiltonian `H = c alpha.(p - qA) + q phi + m c^2 beta` is split into
//! the local part `H1 = -c q alpha.A + q phi` and the free part
//! `H2 = c alpha.p + m c^2 beta`. Both exponentials are applied in closed
//! form: `H1` pointwise in real space, `H2` pointwise in momentum space.
//! One step is the Strang product `U1(dt/2) U2(dt) U1(dt/2)`, with each
//! half step sampling the potentials at the midpoint of its own interval.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{alpha_dot_apply, free_hamiltonian_apply, Spinor};
use crate::field::{pairwise_sum, SpinorField};
use crate::grid::Grid;
use crate::mask::absorbing_mask;
use crate::potentials::PotentialSpec;
use crate::spectral::{Direction, SpectralPlan};
use crate::units::PhysicalConstants;
use crate::vec3::{norm, scale, Vec3};
use crate::{Error, Result};

/// Below this `|A|` the rotation part of the local exponential is the
/// identity.
const TINY_A: f64 = 1e-300;

/// Which form of the energy-time bound [`max_timestep`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepBound {
    /// `hbar / |E|`.
    #[default]
    Hbar,
    /// `pi hbar / |E|`.
    PiHbar,
}

/// Largest time step resolving the phase evolution at energy `e_typical`:
/// `hbar / |E|`.
pub fn max_timestep(e_typical: f64, consts: &PhysicalConstants) -> Result<f64> {
    max_timestep_with(e_typical, consts, StepBound::Hbar)
}

pub fn max_timestep_with(e_typical: f64, consts: &PhysicalConstants, bound: StepBound) -> Result<f64> {
    if e_typical == 0.0 || !e_typical.is_finite() {
        return Err(Error::ZeroEnergy);
    }
    let base = consts.hbar / e_typical.abs();
    Ok(match bound {
        StepBound::Hbar => base,
        StepBound::PiHbar => std::f64::consts::PI * base,
    })
}

/// The bound for relativistic dynamics, taking the rest energy `m c^2` as
/// the typical energy.
pub fn relativistic_max_timestep(consts: &PhysicalConstants, bound: StepBound) -> Result<f64> {
    max_timestep_with(consts.rest_energy(), consts, bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracPropagatorConfig {
    pub dt: f64,
    pub t0: f64,
    pub steps: usize,
    pub spec: PotentialSpec,
    pub mask: bool,
    /// Observables are recorded every `sample_every` steps (0 disables the
    /// trace except for the initial and final samples).
    pub sample_every: usize,
    pub consts: PhysicalConstants,
}

impl DiracPropagatorConfig {
    pub fn new(dt: f64, steps: usize, spec: PotentialSpec) -> Self {
        Self {
            dt,
            t0: 0.0,
            steps,
            spec,
            mask: false,
            sample_every: 0,
            consts: PhysicalConstants::atomic(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter("t0 must be finite".into()));
        }
        self.consts.validate()?;
        self.spec.validate()?;
        if let Ok(bound) = relativistic_max_timestep(&self.consts, StepBound::Hbar) {
            if self.dt > bound {
                log::warn!(
                    "dt = {:.3e} exceeds the rest-energy step bound {:.3e}; results rely on the exact sub-step exponentials",
                    self.dt,
                    bound
                );
            }
        }
        Ok(())
    }
}

/// One row of the observables trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiracSample {
    pub t: f64,
    pub norm: f64,
    pub pos_fraction: f64,
    pub x_mean: f64,
    pub z_mean: f64,
}

/// Applies `exp(-i (dt/2) H1 / hbar)` at every point, with the potentials
/// sampled at `t + dt/4`, the midpoint of the half interval `[t, t + dt/2]`.
pub fn potential_half_step(
    psi: &mut SpinorField,
    spec: &PotentialSpec,
    t: f64,
    dt: f64,
    consts: &PhysicalConstants,
) {
    if spec.is_vacuum() {
        return;
    }
    let grid = *psi.grid();
    let tm = t + 0.25 * dt;
    psi.map_points(|i, v| {
        let pot = spec.sample_potentials(grid.position(i), tm, consts.c);
        local_exponential(pot.phi, pot.a, 0.5 * dt, consts, v)
    });
}

/// `exp(-i tau H1 / hbar) psi` for one spinor, `H1 = -c q alpha.A + q phi`.
#[inline]
pub fn local_exponential(
    phi: f64,
    a: Vec3,
    tau: f64,
    consts: &PhysicalConstants,
    psi: [Complex64; 4],
) -> [Complex64; 4] {
    let q = consts.charge;
    let phase = Complex64::from_polar(1.0, -q * phi * tau / consts.hbar);
    let a_norm = norm(a);
    if a_norm < TINY_A {
        return psi.map(|z| z * phase);
    }
    let theta = consts.c * q * a_norm * tau / consts.hbar;
    let (s, co) = theta.sin_cos();
    let rot = alpha_dot_apply(scale(a, 1.0 / a_norm), psi);
    std::array::from_fn(|k| phase * (psi[k] * co + Complex64::new(0.0, s) * rot[k]))
}

/// Per-lattice-point data of the free propagator.
#[derive(Debug, Clone, Copy)]
struct KineticFactor {
    p: Vec3,
    cos: f64,
    sin_over_e: f64,
}

/// `exp(-i tau H2 / hbar)` for a spinor at momentum `p`.
#[inline]
pub fn free_exponential(p: Vec3, tau: f64, consts: &PhysicalConstants, psi: [Complex64; 4]) -> [Complex64; 4] {
    let e = consts.energy_from_p2(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    let (s, co) = (e * tau / consts.hbar).sin_cos();
    apply_kinetic(&KineticFactor { p, cos: co, sin_over_e: s / e }, consts, psi)
}

#[inline]
fn apply_kinetic(k: &KineticFactor, consts: &PhysicalConstants, psi: [Complex64; 4]) -> [Complex64; 4] {
    let h = free_hamiltonian_apply(k.p, psi, consts);
    let m = Complex64::new(0.0, -k.sin_over_e);
    std::array::from_fn(|c| psi[c] * k.cos + m * h[c])
}

/// Reusable propagator: FFT plans, cached kinetic factors and mask for a
/// fixed grid and time step.
#[derive(Debug)]
pub struct DiracPropagator {
    grid: Grid,
    consts: PhysicalConstants,
    dt: f64,
    plan: SpectralPlan,
    kinetic: Vec<KineticFactor>,
    mask: Option<Vec<f64>>,
}

impl DiracPropagator {
    pub fn new(grid: &Grid, consts: PhysicalConstants, dt: f64, mask: bool) -> Self {
        let kinetic = (0..grid.len())
            .map(|i| {
                let p = scale(grid.wavevector(i), consts.hbar);
                let e = consts.energy_from_p2(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                let (s, co) = (e * dt / consts.hbar).sin_cos();
                KineticFactor { p, cos: co, sin_over_e: s / e }
            })
            .collect();
        Self {
            grid: *grid,
            consts,
            dt,
            plan: SpectralPlan::new(grid),
            kinetic,
            mask: mask.then(|| absorbing_mask(grid)),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Full free step `exp(-i dt H2 / hbar)` via the momentum representation.
    pub fn kinetic_full_step(&mut self, psi: &mut SpinorField) {
        self.plan.transform(psi, Direction::Forward);
        let kinetic = &self.kinetic;
        let consts = &self.consts;
        psi.map_points(|i, v| apply_kinetic(&kinetic[i], consts, v));
        self.plan.transform(psi, Direction::Inverse);
    }

    /// One Strang step from `t` to `t + dt`.
    pub fn step(&mut self, psi: &mut SpinorField, spec: &PotentialSpec, t: f64) {
        potential_half_step(psi, spec, t, self.dt, &self.consts);
        self.kinetic_full_step(psi);
        potential_half_step(psi, spec, t + 0.5 * self.dt, self.dt, &self.consts);
        if let Some(mask) = &self.mask {
            psi.map_points(|i, v| v.map(|z| z * mask[i]));
        }
    }

    fn sample(&mut self, psi: &SpinorField, t: f64) -> DiracSample {
        let n = dirac_norm(psi);
        let (fp, _) = projection_split_with(psi, &mut self.plan, &self.consts);
        let dv = self.grid.cell_volume();
        let weight = |i: usize| psi.at(i).iter().map(|z| z.norm_sqr()).sum::<f64>();
        let x = pairwise_sum(0, self.grid.len(), &|i| weight(i) * self.grid.position(i)[0]) * dv;
        let z = pairwise_sum(0, self.grid.len(), &|i| weight(i) * self.grid.position(i)[2]) * dv;
        DiracSample {
            t,
            norm: n,
            pos_fraction: fp,
            x_mean: if n > 0.0 { x / n } else { 0.0 },
            z_mean: if n > 0.0 { z / n } else { 0.0 },
        }
    }
}

/// Propagates `psi` for `cfg.steps` Strang steps and returns the final state
/// with the observables trace.
pub fn propagate_dirac(
    mut psi: SpinorField,
    cfg: &DiracPropagatorConfig,
) -> Result<(SpinorField, Vec<DiracSample>)> {
    cfg.validate()?;
    let mut prop = DiracPropagator::new(psi.grid(), cfg.consts, cfg.dt, cfg.mask);
    let mut trace = vec![prop.sample(&psi, cfg.t0)];
    for step in 0..cfg.steps {
        let t = cfg.t0 + step as f64 * cfg.dt;
        prop.step(&mut psi, &cfg.spec, t);
        let done = step + 1;
        let record = cfg.sample_every > 0 && done % cfg.sample_every == 0;
        if record || done == cfg.steps {
            let s = prop.sample(&psi, t + cfg.dt);
            // a finite field can still overflow the reductions
            if !psi.is_finite() || !s.norm.is_finite() {
                return Err(Error::NonFinite { step: done, time: t + cfg.dt });
            }
            if trace.last().map(|l: &DiracSample| l.t) != Some(s.t) {
                trace.push(s);
            }
        }
    }
    Ok((psi, trace))
}

/// `<psi|psi>` with the identity metric.
pub fn dirac_norm(psi: &SpinorField) -> f64 {
    psi.norm_sq()
}

/// Probability per momentum-lattice point (FFT order), summing to the norm.
pub fn momentum_distribution(psi: &SpinorField) -> Vec<f64> {
    let mut plan = SpectralPlan::new(psi.grid());
    let mut f = psi.clone();
    plan.transform(&mut f, Direction::Forward);
    let dv = psi.grid().cell_volume();
    (0..psi.grid().len())
        .map(|i| f.at(i).iter().map(|z| z.norm_sqr()).sum::<f64>() * dv)
        .collect()
}

/// Fractions of the norm in the positive- and negative-energy subspaces of
/// the free Hamiltonian, using `Lambda(p) = (E I +- H(p)) / (2E)`.
pub fn energy_projection_split(psi: &SpinorField, consts: &PhysicalConstants) -> (f64, f64) {
    let mut plan = SpectralPlan::new(psi.grid());
    projection_split_with(psi, &mut plan, consts)
}

fn projection_split_with(psi: &SpinorField, plan: &mut SpectralPlan, consts: &PhysicalConstants) -> (f64, f64) {
    let grid = *psi.grid();
    let mut f = psi.clone();
    plan.transform(&mut f, Direction::Forward);
    let parts = |sign: f64| {
        pairwise_sum(0, grid.len(), &|i| {
            let v = f.at(i);
            let p = scale(grid.wavevector(i), consts.hbar);
            let e = consts.energy_from_p2(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            let h = free_hamiltonian_apply(p, v, consts);
            (0..4).map(|c| ((v[c] * e + h[c] * sign) / (2.0 * e)).norm_sqr()).sum::<f64>()
        })
    };
    let pos = parts(1.0);
    let neg = parts(-1.0);
    let total = pos + neg;
    if total == 0.0 {
        return (0.0, 0.0);
    }
    (pos / total, neg / total)
}

/// Unit-norm plane wave `u exp(i p.r / hbar) / sqrt(V)`. `p` must lie on the
/// grid's momentum lattice and `u` is normalized here.
pub fn dirac_plane_wave(grid: &Grid, p: Vec3, u: &Spinor, consts: &PhysicalConstants) -> Result<SpinorField> {
    check_lattice_momentum(grid, p, consts.hbar)?;
    let un = u.norm();
    if un == 0.0 {
        return Err(Error::InvalidParameter("zero spinor".into()));
    }
    let amp = 1.0 / (un * grid.volume().sqrt());
    Ok(SpinorField::from_fn(*grid, |r| {
        let ph = Complex64::from_polar(amp, (p[0] * r[0] + p[1] * r[1] + p[2] * r[2]) / consts.hbar);
        std::array::from_fn(|c| u[c] * ph)
    }))
}

/// Overlap `<u exp(i p.r/hbar)/sqrt(V) | psi>` of `psi` with a unit plane
/// wave, evaluated directly in real space.
pub fn plane_wave_overlap(psi: &SpinorField, p: Vec3, u: &Spinor, consts: &PhysicalConstants) -> Complex64 {
    let grid = *psi.grid();
    let amp = grid.cell_volume() / grid.volume().sqrt();
    let re = pairwise_sum(0, grid.len(), &|i| overlap_term(psi, &grid, i, p, u, consts).re);
    let im = pairwise_sum(0, grid.len(), &|i| overlap_term(psi, &grid, i, p, u, consts).im);
    Complex64::new(re, im) * amp
}

#[inline]
fn overlap_term(psi: &SpinorField, grid: &Grid, i: usize, p: Vec3, u: &Spinor, consts: &PhysicalConstants) -> Complex64 {
    let r = grid.position(i);
    let ph = Complex64::from_polar(1.0, -(p[0] * r[0] + p[1] * r[1] + p[2] * r[2]) / consts.hbar);
    let v = psi.at(i);
    (0..4).map(|c| u[c].conj() * v[c]).sum::<Complex64>() * ph
}

/// Verifies that momentum `p` is representable on `grid`.
pub(crate) fn check_lattice_momentum(grid: &Grid, p: Vec3, hbar: f64) -> Result<usize> {
    let k = scale(p, 1.0 / hbar);
    let (along, off): (Vec<f64>, f64) = if grid.dim() == 1 {
        (vec![k[0]], k[1].abs() + k[2].abs())
    } else {
        (vec![k[0], k[2]], k[1].abs())
    };
    if off != 0.0 {
        return Err(Error::OffLattice(p.to_vec()));
    }
    grid.lattice_slot(&along)
}
