//! Real-space split-operator propagation of the two-component
//! (Feshbach-Villars) Klein-Gordon equation.
//!
//! `H = H1 + H2` with `H1 = q phi + sigma3 m c^2` (diagonal) and
//! `H2 = (sigma3 + i sigma2) D / (2m)`, `D = (-i hbar grad - q A)^2`. Because
//! `(sigma3 + i sigma2)^2 = 0`, `exp(-i dt H2 / hbar) = I - i dt H2 / hbar`
//! exactly, so the kinetic step needs one application of `D` to the sum of
//! the two components.
//!
//! `D` is discretized with centered finite differences on the periodic grid.
//! The mixed term is written as `i hbar q (grad.(A f) + A.grad f)`, which
//! keeps the discrete `D` Hermitian and the evolution exactly
//! charge-conserving.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{inner_product, pairwise_sum, Metric, PairField};
use crate::grid::Grid;
use crate::mask::absorbing_mask;
use crate::potentials::PotentialSpec;
use crate::units::PhysicalConstants;
use crate::vec3::{dot, scale, Vec3};
use crate::{Error, Result};

/// Accuracy order of the centered difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StencilOrder {
    #[serde(rename = "2")]
    Second,
    #[default]
    #[serde(rename = "4")]
    Fourth,
}

impl StencilOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            o => Err(Error::InvalidParameter(format!("stencil order must be 2 or 4, got {o}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    /// First-derivative weights for offsets `1..=r` (antisymmetric).
    fn first(self) -> &'static [f64] {
        match self {
            Self::Second => &[0.5],
            Self::Fourth => &[8.0 / 12.0, -1.0 / 12.0],
        }
    }

    /// Second-derivative weights for offsets `0..=r` (symmetric).
    fn second(self) -> &'static [f64] {
        match self {
            Self::Second => &[-2.0, 1.0],
            Self::Fourth => &[-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        }
    }

    /// Eigenvalue of `-laplacian` along one axis for wave number `k`:
    /// the stencil's effective `k^2`.
    pub fn k2_symbol(self, k: f64, h: f64) -> f64 {
        let w = self.second();
        -(w[0] + (1..w.len()).map(|s| 2.0 * w[s] * (s as f64 * k * h).cos()).sum::<f64>()) / (h * h)
    }

    /// `G e^{ikx} = i g(k) e^{ikx}` for the first-derivative stencil; returns `g`.
    pub fn k_symbol(self, k: f64, h: f64) -> f64 {
        let w = self.first();
        (0..w.len()).map(|s| 2.0 * w[s] * ((s + 1) as f64 * k * h).sin()).sum::<f64>() / h
    }
}

/// Free-particle energy of the discretized model at lattice wave vector `k`.
pub fn discrete_energy(grid: &Grid, k: Vec3, order: StencilOrder, consts: &PhysicalConstants) -> f64 {
    let h = grid.spacing();
    let k2: f64 = axis_components(grid, k).iter().map(|&ka| order.k2_symbol(ka, h)).sum();
    let t = consts.hbar * consts.hbar * k2 / (2.0 * consts.mass);
    let mc2 = consts.rest_energy();
    (mc2 * (mc2 + 2.0 * t)).sqrt()
}

fn axis_components(grid: &Grid, v: Vec3) -> Vec<f64> {
    if grid.dim() == 1 {
        vec![v[0]]
    } else {
        vec![v[0], v[2]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgPropagatorConfig {
    pub dt: f64,
    pub t0: f64,
    pub steps: usize,
    pub spec: PotentialSpec,
    pub stencil_order: StencilOrder,
    pub mask: bool,
    pub sample_every: usize,
    pub consts: PhysicalConstants,
}

impl KgPropagatorConfig {
    pub fn new(dt: f64, steps: usize, spec: PotentialSpec) -> Self {
        Self {
            dt,
            t0: 0.0,
            steps,
            spec,
            stencil_order: StencilOrder::Fourth,
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
        self.spec.validate()
    }
}

/// One row of the observables trace. `x_mean` and `z_mean` are weighted by
/// the charge density `|phi|^2 - |chi|^2`; `density` is the plain
/// `|phi|^2 + |chi|^2` integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KgSample {
    pub t: f64,
    pub charge: f64,
    pub density: f64,
    pub x_mean: f64,
    pub z_mean: f64,
}

/// Feshbach-Villars plane wave of momentum `p` on the energy branch `sign`
/// (`+1` or `-1`): `((1 +- E/mc^2)/2, (1 -+ E/mc^2)/2) exp(i p.r/hbar)` scaled
/// so that the sigma3 charge over the grid volume is exactly `sign`.
pub fn fv_plane_wave(p: Vec3, sign: f64, grid: &Grid, consts: &PhysicalConstants) -> Result<PairField> {
    let e = consts.energy_from_p2(dot(p, p));
    fv_plane_wave_with_energy(p, sign, e, grid, consts)
}

/// As [`fv_plane_wave`], but an eigenstate of the discretized free
/// Hamiltonian with the given stencil.
pub fn fv_plane_wave_discrete(
    p: Vec3,
    sign: f64,
    grid: &Grid,
    order: StencilOrder,
    consts: &PhysicalConstants,
) -> Result<PairField> {
    let e = discrete_energy(grid, scale(p, 1.0 / consts.hbar), order, consts);
    fv_plane_wave_with_energy(p, sign, e, grid, consts)
}

fn fv_plane_wave_with_energy(p: Vec3, sign: f64, e: f64, grid: &Grid, consts: &PhysicalConstants) -> Result<PairField> {
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidParameter(format!("energy sign must be +1 or -1, got {sign}")));
    }
    crate::dirac::check_lattice_momentum(grid, p, consts.hbar)?;
    let eps = e / consts.rest_energy();
    let amp = 1.0 / (eps * grid.volume()).sqrt();
    let upper = 0.5 * (1.0 + sign * eps) * amp;
    let lower = 0.5 * (1.0 - sign * eps) * amp;
    Ok(PairField::from_fn(*grid, |r| {
        let ph = Complex64::from_polar(1.0, dot(p, r) / consts.hbar);
        [ph * upper, ph * lower]
    }))
}

/// Applies `exp(-i (dt/2) H1 / hbar)` with `phi` sampled at `t + dt/4`.
pub fn kg_potential_half_step(
    psi: &mut PairField,
    spec: &PotentialSpec,
    t: f64,
    dt: f64,
    consts: &PhysicalConstants,
) {
    let grid = *psi.grid();
    let tm = t + 0.25 * dt;
    let mc2 = consts.rest_energy();
    let tau = 0.5 * dt / consts.hbar;
    let vacuum = spec.is_vacuum();
    let (su, cu) = (mc2 * tau).sin_cos();
    let rest = [Complex64::new(cu, -su), Complex64::new(cu, su)];
    psi.map_points(|i, v| {
        if vacuum {
            return [v[0] * rest[0], v[1] * rest[1]];
        }
        let qphi = consts.charge * spec.sample_potentials(grid.position(i), tm, consts.c).phi;
        [
            v[0] * Complex64::from_polar(1.0, -(qphi + mc2) * tau),
            v[1] * Complex64::from_polar(1.0, -(qphi - mc2) * tau),
        ]
    });
}

/// Discrete `D = (-i hbar grad - q A)^2` on a periodic grid.
#[derive(Debug, Clone)]
pub struct KineticOperator {
    grid: Grid,
    order: StencilOrder,
    consts: PhysicalConstants,
    /// `A` along each grid axis, plus `|A|^2`, when a vector potential is set.
    vector: Option<(Vec<Vec<f64>>, Vec<f64>)>,
    work: Vec<Complex64>,
}

impl KineticOperator {
    pub fn new(grid: &Grid, order: StencilOrder, consts: PhysicalConstants) -> Self {
        Self {
            grid: *grid,
            order,
            consts,
            vector: None,
            work: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `A(r, t)`; clears it when `spec` has no vector potential.
    pub fn set_vector_potential(&mut self, spec: &PotentialSpec, t: f64) {
        if !spec.has_vector_potential() {
            self.vector = None;
            return;
        }
        let g = self.grid;
        let n = g.len();
        let axes = if g.dim() == 1 { vec![0] } else { vec![0, 2] };
        let mut comps = vec![vec![0.0; n]; axes.len()];
        let mut a2 = vec![0.0; n];
        for i in 0..n {
            let a = spec.sample_potentials(g.position(i), t, self.consts.c).a;
            for (slot, &ax) in axes.iter().enumerate() {
                comps[slot][i] = a[ax];
            }
            a2[i] = dot(a, a);
        }
        self.vector = Some((comps, a2));
    }

    /// Sets `A` directly from per-point vectors (used by tests).
    pub fn set_vector_field(&mut self, a: &[Vec3]) {
        let g = self.grid;
        let axes = if g.dim() == 1 { vec![0] } else { vec![0, 2] };
        let comps = axes.iter().map(|&ax| a.iter().map(|v| v[ax]).collect()).collect();
        let a2 = a.iter().map(|v| dot(*v, *v)).collect();
        self.vector = Some((comps, a2));
    }

    /// `out = D u`.
    pub fn apply(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        let g = self.grid;
        let h = g.spacing();
        let hbar = self.consts.hbar;
        let q = self.consts.charge;
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for axis in 0..g.dim() {
            second_derivative(&g, axis, self.order, u, out, -hbar * hbar / (h * h));
        }
        let Some((comps, a2)) = &self.vector else {
            return;
        };
        let mixed = Complex64::new(0.0, hbar * q / h);
        for (axis, a) in comps.iter().enumerate() {
            // grad.(A u)
            for (w, (&ai, &ui)) in self.work.iter_mut().zip(a.iter().zip(u)) {
                *w = ui * ai;
            }
            first_derivative(&g, axis, self.order, &self.work, out, mixed, None);
            // A.grad u
            first_derivative(&g, axis, self.order, u, out, mixed, Some(a));
        }
        let qq = q * q;
        for (o, (&ui, &s)) in out.iter_mut().zip(u.iter().zip(a2)) {
            *o += ui * (qq * s);
        }
    }
}

/// Offset along `axis` of flat index `i` by `s` sites, periodically.
#[inline]
fn shifted(grid: &Grid, i: usize, axis: usize, s: isize) -> usize {
    let n = grid.n() as isize;
    if grid.dim() == 1 {
        (i as isize + s).rem_euclid(n) as usize
    } else {
        let (row, col) = ((i / grid.n()) as isize, (i % grid.n()) as isize);
        if axis == 0 {
            ((row + s).rem_euclid(n) * n + col) as usize
        } else {
            (row * n + (col + s).rem_euclid(n)) as usize
        }
    }
}

/// `out += factor * (second-difference of u along axis)`, without the `1/h^2`.
fn second_derivative(grid: &Grid, axis: usize, order: StencilOrder, u: &[Complex64], out: &mut [Complex64], factor: f64) {
    let w = order.second();
    let r = w.len() - 1;
    let n = grid.len();
    let stride = if grid.dim() == 2 && axis == 0 { grid.n() } else { 1 };
    let line = grid.n();
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let pos = if stride == 1 { i % line } else { i / line };
        let mut acc = u[i] * w[0];
        if pos >= r && pos + r < line {
            for (s, &ws) in w.iter().enumerate().skip(1) {
                acc += (u[i + s * stride] + u[i - s * stride]) * ws;
            }
        } else {
            for (s, &ws) in w.iter().enumerate().skip(1) {
                let s = s as isize;
                acc += (u[shifted(grid, i, axis, s)] + u[shifted(grid, i, axis, -s)]) * ws;
            }
        }
        *o += acc * factor;
    }
}

/// `out += factor * weight * (first-difference of u along axis)` without the
/// `1/h`; `weight` multiplies pointwise after differencing.
fn first_derivative(
    grid: &Grid,
    axis: usize,
    order: StencilOrder,
    u: &[Complex64],
    out: &mut [Complex64],
    factor: Complex64,
    weight: Option<&[f64]>,
) {
    let w = order.first();
    let r = w.len();
    let stride = if grid.dim() == 2 && axis == 0 { grid.n() } else { 1 };
    let line = grid.n();
    for (i, o) in out.iter_mut().enumerate() {
        let pos = if stride == 1 { i % line } else { i / line };
        let mut acc = Complex64::new(0.0, 0.0);
        if pos >= r && pos + r < line {
            for (s, &ws) in w.iter().enumerate() {
                let d = (s + 1) * stride;
                acc += (u[i + d] - u[i - d]) * ws;
            }
        } else {
            for (s, &ws) in w.iter().enumerate() {
                let s = (s + 1) as isize;
                acc += (u[shifted(grid, i, axis, s)] - u[shifted(grid, i, axis, -s)]) * ws;
            }
        }
        let scale = weight.map_or(1.0, |wt| wt[i]);
        *o += acc * factor * scale;
    }
}

/// `H2 psi = (1, -1) D(phi + chi) / (2m)` with the operator's current `A`.
pub fn apply_h2(op: &mut KineticOperator, psi: &PairField) -> PairField {
    let n = psi.grid().len();
    let (phi, chi) = (psi.component(0), psi.component(1));
    let u: Vec<Complex64> = (0..n).map(|i| phi[i] + chi[i]).collect();
    let mut du = vec![Complex64::new(0.0, 0.0); n];
    op.apply(&u, &mut du);
    let s = 0.5 / op.consts.mass;
    let upper: Vec<Complex64> = du.iter().map(|z| z * s).collect();
    let lower: Vec<Complex64> = du.iter().map(|z| -z * s).collect();
    PairField::from_components(*psi.grid(), [upper, lower]).expect("grid sizes match")
}

/// Exact `exp(-i dt H2 / hbar)` with `A` sampled at `t + dt/2`.
pub fn kg_kinetic_step(
    psi: &mut PairField,
    op: &mut KineticOperator,
    spec: &PotentialSpec,
    t: f64,
    dt: f64,
) {
    op.set_vector_potential(spec, t + 0.5 * dt);
    kinetic_update(psi, op, dt);
}

fn kinetic_update(psi: &mut PairField, op: &mut KineticOperator, dt: f64) {
    let n = psi.grid().len();
    let u: Vec<Complex64> = {
        let (phi, chi) = (psi.component(0), psi.component(1));
        (0..n).map(|i| phi[i] + chi[i]).collect()
    };
    let mut du = vec![Complex64::new(0.0, 0.0); n];
    op.apply(&u, &mut du);
    let f = Complex64::new(0.0, -dt / (2.0 * op.consts.mass * op.consts.hbar));
    let comps = psi.components_mut();
    for (i, d) in du.iter().enumerate() {
        let delta = d * f;
        comps[0][i] += delta;
        comps[1][i] -= delta;
    }
}

/// `sigma3` charge `<psi|sigma3|psi>`.
pub fn kg_charge(psi: &PairField) -> f64 {
    inner_product(psi, psi, Metric::Sigma3).map(|z| z.re).unwrap_or(f64::NAN)
}

#[derive(Debug)]
pub struct KgPropagator {
    grid: Grid,
    consts: PhysicalConstants,
    dt: f64,
    op: KineticOperator,
    mask: Option<Vec<f64>>,
}

impl KgPropagator {
    pub fn new(grid: &Grid, consts: PhysicalConstants, dt: f64, order: StencilOrder, mask: bool) -> Self {
        Self {
            grid: *grid,
            consts,
            dt,
            op: KineticOperator::new(grid, order, consts),
            mask: mask.then(|| absorbing_mask(grid)),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&mut self, psi: &mut PairField, spec: &PotentialSpec, t: f64) {
        kg_potential_half_step(psi, spec, t, self.dt, &self.consts);
        kg_kinetic_step(psi, &mut self.op, spec, t, self.dt);
        kg_potential_half_step(psi, spec, t + 0.5 * self.dt, self.dt, &self.consts);
        if let Some(mask) = &self.mask {
            psi.map_points(|i, v| v.map(|z| z * mask[i]));
        }
    }

    fn sample(&self, psi: &PairField, t: f64) -> KgSample {
        let g = self.grid;
        let dv = g.cell_volume();
        let rho = |i: usize| psi.component(0)[i].norm_sqr() - psi.component(1)[i].norm_sqr();
        let charge = kg_charge(psi);
        let density = psi.norm_sq();
        let x = pairwise_sum(0, g.len(), &|i| rho(i) * g.position(i)[0]) * dv;
        let z = pairwise_sum(0, g.len(), &|i| rho(i) * g.position(i)[2]) * dv;
        let (x_mean, z_mean) = if charge != 0.0 { (x / charge, z / charge) } else { (0.0, 0.0) };
        KgSample {
            t,
            charge,
            density,
            x_mean,
            z_mean,
        }
    }
}

pub fn propagate_kg(mut psi: PairField, cfg: &KgPropagatorConfig) -> Result<(PairField, Vec<KgSample>)> {
    cfg.validate()?;
    if !strang_step_is_stable(psi.grid(), cfg.stencil_order, cfg.dt, &cfg.consts) {
        log::warn!("dt = {} exceeds the free-evolution stability limit of this grid; expect growth", cfg.dt);
    }
    let mut prop = KgPropagator::new(psi.grid(), cfg.consts, cfg.dt, cfg.stencil_order, cfg.mask);
    let mut trace = vec![prop.sample(&psi, cfg.t0)];
    for step in 0..cfg.steps {
        let t = cfg.t0 + step as f64 * cfg.dt;
        prop.step(&mut psi, &cfg.spec, t);
        let done = step + 1;
        let record = cfg.sample_every > 0 && done % cfg.sample_every == 0;
        if record || done == cfg.steps {
            let s = prop.sample(&psi, t + cfg.dt);
            // a finite field can still overflow the reductions
            if !psi.is_finite() || !s.density.is_finite() {
                return Err(Error::NonFinite { step: done, time: t + cfg.dt });
            }
            if trace.last().map(|l: &KgSample| l.t) != Some(s.t) {
                trace.push(s);
            }
        }
    }
    Ok((psi, trace))
}

/// Eigenphase per step of the free Strang map `U1(dt/2) U2(dt) U1(dt/2)`
/// at lattice wave vector `k`: `cos(theta) = cos(mc^2 dt/hbar) - tau sin(mc^2 dt/hbar)`
/// with `tau = T_kin dt / hbar`.
pub fn strang_free_phase(grid: &Grid, k: Vec3, order: StencilOrder, dt: f64, consts: &PhysicalConstants) -> f64 {
    let h = grid.spacing();
    let k2: f64 = axis_components(grid, k).iter().map(|&ka| order.k2_symbol(ka, h)).sum();
    let tkin = consts.hbar * consts.hbar * k2 / (2.0 * consts.mass);
    let a = consts.rest_energy() * dt / consts.hbar;
    let tau = tkin * dt / consts.hbar;
    // 1 - cos(theta) = 2 sin^2(a/2) + tau sin(a), written to keep small angles accurate
    let half = ((0.5 * a).sin().powi(2) + 0.5 * tau * a.sin()).clamp(0.0, 1.0);
    2.0 * half.sqrt().asin()
}

/// Whether every lattice mode of the free Strang map has a real eigenphase.
/// The map is only conditionally stable: `1 - cos(theta)` must stay in `[0, 2]`
/// up to the largest stencil `k^2`.
pub fn strang_step_is_stable(grid: &Grid, order: StencilOrder, dt: f64, consts: &PhysicalConstants) -> bool {
    let h = grid.spacing();
    let kmax = grid.wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let k2 = grid.dim() as f64 * order.k2_symbol(kmax, h);
    let tkin = consts.hbar * consts.hbar * k2 / (2.0 * consts.mass);
    let a = consts.rest_energy() * dt / consts.hbar;
    let tau = tkin * dt / consts.hbar;
    let v = 2.0 * (0.5 * a).sin().powi(2) + tau * a.sin();
    (0.0..=2.0).contains(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::oracle::expm;
    use crate::potentials::Envelope;
    use nalgebra::{Matrix2, Vector2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::atomic()
    }

    fn random_field(g: Grid, rng: &mut impl Rng) -> PairField {
        PairField::from_fn(g, |_| {
            std::array::from_fn(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        })
    }

    #[test]
    fn rest_plane_waves() {
        let g = make_grid(1, 16, 4.0).unwrap();
        let c = consts();
        let up = fv_plane_wave([0.0; 3], 1.0, &g, &c).unwrap();
        let down = fv_plane_wave([0.0; 3], -1.0, &g, &c).unwrap();
        for i in 0..g.len() {
            assert_eq!(up.at(i)[1], Complex64::new(0.0, 0.0));
            assert_eq!(down.at(i)[0], Complex64::new(0.0, 0.0));
        }
        assert!((kg_charge(&up) - 1.0).abs() < 1e-14);
        assert!((kg_charge(&down) + 1.0).abs() < 1e-14);
        assert!(fv_plane_wave([1.0, 0.0, 0.0], 1.0, &g, &c).is_err());
    }

    #[test]
    fn plane_wave_is_eigenvector_of_continuum_hamiltonian() {
        let c = consts();
        let g = make_grid(1, 64, 2.0 * PI / 3.0).unwrap();
        for j in -31..=31 {
            let p = 3.0 * j as f64;
            for sign in [1.0, -1.0] {
                let f = fv_plane_wave([p, 0.0, 0.0], sign, &g, &c).unwrap();
                let v = f.at(5);
                let t = p * p / 2.0;
                let mc2 = c.rest_energy();
                let h = Matrix2::new(mc2 + t, t, -t, -mc2 - t);
                let hv = h * Vector2::new(v[0].re, v[1].re);
                let e = sign * c.energy_from_p2(p * p);
                let res = (hv[0] - e * v[0].re).abs() + (hv[1] - e * v[1].re).abs();
                assert!(res < 1e-10 * e.abs() * (v[0].norm() + v[1].norm()), "p={p} res={res}");
            }
        }
    }

    #[test]
    fn half_step_matches_oracle() {
        let c = consts();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = make_grid(1, 8, 3.0).unwrap();
        for _ in 0..50 {
            let z = rng.random_range(0.1..3.0);
            let a = rng.random_range(0.2..2.0);
            let spec = PotentialSpec::SoftCore { z, a };
            let dt = rng.random_range(0.0..1e-3);
            let t = rng.random_range(0.0..1.0);
            let psi0 = random_field(g, &mut rng);
            let mut psi = psi0.clone();
            kg_potential_half_step(&mut psi, &spec, t, dt, &c);
            for i in 0..g.len() {
                let phi = spec.sample_potentials(g.position(i), t + 0.25 * dt, c.c).phi;
                let mc2 = c.rest_energy();
                let h = Matrix2::new(
                    Complex64::from(c.charge * phi + mc2),
                    0.0.into(),
                    0.0.into(),
                    Complex64::from(c.charge * phi - mc2),
                );
                let u = expm(&(h * Complex64::new(0.0, -0.5 * dt)));
                let v0 = psi0.at(i);
                let expect = u * Vector2::new(v0[0], v0[1]);
                let got = psi.at(i);
                assert!((got[0] - expect[0]).norm() < 1e-12 && (got[1] - expect[1]).norm() < 1e-12);
                assert!((got[0].norm() - v0[0].norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn kernel_of_nilpotent_block_is_untouched() {
        let c = consts();
        let g = make_grid(1, 32, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = random_field(g, &mut rng);
        let mut psi = PairField::from_fn(g, |_| [Complex64::new(0.0, 0.0); 2]);
        for i in 0..g.len() {
            let v = base.at(i)[0];
            psi.set(i, [v, -v]);
        }
        let before = psi.clone();
        let mut op = KineticOperator::new(&g, StencilOrder::Fourth, c);
        let spec = PotentialSpec::StandingWave { e0: [3.0, 0.0, 0.0], k: [0.0, 0.0, 1.0], envelope: Envelope::unlimited() };
        kg_kinetic_step(&mut psi, &mut op, &spec, 0.3, 0.01);
        assert_eq!(psi, before);
    }

    #[test]
    fn kinetic_step_is_nilpotent_update() {
        let c = consts();
        let g = make_grid(1, 32, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi0 = random_field(g, &mut rng);
        let mut op = KineticOperator::new(&g, StencilOrder::Second, c);
        let mut once = psi0.clone();
        kinetic_update(&mut once, &mut op, 0.01);
        let delta = PairField::from_fn(g, |_| [Complex64::new(0.0, 0.0); 2]);
        let mut delta = delta;
        for i in 0..g.len() {
            let (a, b) = (once.at(i), psi0.at(i));
            delta.set(i, [a[0] - b[0], a[1] - b[1]]);
        }
        let mut twice = delta.clone();
        kinetic_update(&mut twice, &mut op, 0.01);
        let scale = delta.norm_sq().sqrt();
        for i in 0..g.len() {
            let (a, b) = (twice.at(i), delta.at(i));
            assert!((a[0] - b[0]).norm() < 1e-13 * scale);
            assert!((a[1] - b[1]).norm() < 1e-13 * scale);
        }
    }

    #[test]
    fn stencil_symbols_match_application() {
        let c = consts();
        for order in [StencilOrder::Second, StencilOrder::Fourth] {
            for dim in [1, 2] {
                let g = make_grid(dim, 16, 7.0).unwrap();
                let k = if dim == 1 { [3.0 * 2.0 * PI / 7.0, 0.0, 0.0] } else { [2.0 * 2.0 * PI / 7.0, 0.0, -5.0 * 2.0 * PI / 7.0] };
                let f = fv_plane_wave(k, 1.0, &g, &c).unwrap();
                let mut op = KineticOperator::new(&g, order, c);
                let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
                op.apply(f.component(0), &mut out);
                let sym: f64 = axis_components(&g, k).iter().map(|&ka| order.k2_symbol(ka, g.spacing())).sum();
                for i in 0..g.len() {
                    assert!((out[i] - f.component(0)[i] * sym).norm() < 1e-10 * sym);
                }
                let h = g.spacing();
                assert!((order.k2_symbol(1e-3, h) - 1e-6).abs() < 1e-10);
                assert!((order.k_symbol(1e-3, h) - 1e-3).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn discrete_operator_is_pseudo_hermitian() {
        let c = consts();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (dim, order) in [(1, StencilOrder::Second), (1, StencilOrder::Fourth), (2, StencilOrder::Fourth)] {
            let g = make_grid(dim, 16, 6.0).unwrap();
            let mut op = KineticOperator::new(&g, order, c);
            let a: Vec<Vec3> = (0..g.len())
                .map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
                .collect();
            op.set_vector_field(&a);
            for _ in 0..5 {
                let f = random_field(g, &mut rng);
                let h = random_field(g, &mut rng);
                let lhs = inner_product(&f, &apply_h2(&mut op, &h), Metric::Sigma3).unwrap();
                let rhs = inner_product(&apply_h2(&mut op, &f), &h, Metric::Sigma3).unwrap();
                assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn strang_phase_of_rest_state() {
        let c = consts();
        let g = make_grid(1, 8, 8.0).unwrap();
        let th = strang_free_phase(&g, [0.0; 3], StencilOrder::Fourth, 1e-5, &c);
        assert!((th - c.rest_energy() * 1e-5).abs() < 1e-14);
    }

    #[test]
    fn stability_limit_on_fine_grids() {
        let c = consts();
        let coarse = make_grid(1, 64, 20.0).unwrap();
        assert!(strang_step_is_stable(&coarse, StencilOrder::Fourth, 1e-5, &c));
        // rest phase near 3pi/2 with a large stencil k^2 pushes 1 - cos below zero
        let fine = make_grid(1, 64, 0.64).unwrap();
        let dt = 1.5 * PI / c.rest_energy();
        assert!(!strang_step_is_stable(&fine, StencilOrder::Fourth, dt, &c));
        assert!(strang_step_is_stable(&fine, StencilOrder::Fourth, 1e-6, &c));
    }
}
