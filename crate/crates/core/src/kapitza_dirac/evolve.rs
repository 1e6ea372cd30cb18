//! Crank-Nicolson propagation of the coupled-mode equations.
//!
//! Coefficients are stored in a frame rotating with a constant energy
//! `frame_energy`, i.e. the solver integrates `M(t) - frame_energy` and the
//! laboratory coefficients are `c * exp(-i frame_energy t / hbar)`. Only a
//! global phase depends on the frame, but choosing it near the populated
//! energies keeps the per-step phases small, which the Cayley transform
//! needs for accuracy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::solver::BlockTridiagonalLu;
use super::system::{coupling_blocks, diagonal_energies, KdLaser, ModeBasis};
use crate::algebra::Mat4;
use crate::{Error, Result};

/// Population allowed within two sites of either ladder end.
pub const CUTOFF_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    /// `c_n^gamma` in rotating-frame convention, index `4 * site + gamma`.
    pub coeffs: Vec<Complex64>,
    pub t: f64,
    pub frame_energy: f64,
}

impl ModeState {
    /// `c_0^{up+} = 1` at `t = 0`, in the frame of `E(p)`.
    pub fn initial(basis: &ModeBasis) -> Self {
        let e0 = basis.energy_at_site(basis.site(0).expect("ladder contains n = 0"));
        Self::initial_in_frame(basis, e0)
    }

    pub fn initial_in_frame(basis: &ModeBasis, frame_energy: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.dim()];
        coeffs[basis.index(0, 0).expect("ladder contains n = 0")] = Complex64::new(1.0, 0.0);
        Self {
            coeffs,
            t: 0.0,
            frame_energy,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Coefficients of the laboratory-frame equations.
    pub fn lab_coefficients(&self, hbar: f64) -> Vec<Complex64> {
        let ph = Complex64::from_polar(1.0, -self.frame_energy * self.t / hbar);
        self.coeffs.iter().map(|z| z * ph).collect()
    }
}

/// Occupation probabilities of one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupations {
    pub n: Vec<i32>,
    /// `|c_n|^2 = sum_gamma |c_n^gamma|^2`.
    pub total: Vec<f64>,
    /// `|c_n^gamma|^2` in mode order `up+, down+, up-, down-`.
    pub by_mode: Vec<[f64; 4]>,
}

impl Occupations {
    pub fn at(&self, n: i32) -> Option<f64> {
        self.n.iter().position(|&m| m == n).map(|i| self.total[i])
    }

    pub fn modes_at(&self, n: i32) -> Option<[f64; 4]> {
        self.n.iter().position(|&m| m == n).map(|i| self.by_mode[i])
    }

    pub fn sum(&self) -> f64 {
        self.total.iter().sum()
    }
}

pub fn occupations(state: &ModeState, basis: &ModeBasis) -> Occupations {
    let by_mode: Vec<[f64; 4]> = (0..basis.sites())
        .map(|s| std::array::from_fn(|g| state.coeffs[4 * s + g].norm_sqr()))
        .collect();
    Occupations {
        n: (0..basis.sites()).map(|s| basis.n_of(s)).collect(),
        total: by_mode.iter().map(|m| m.iter().sum()).collect(),
        by_mode,
    }
}

/// Population within two sites of either end of the ladder.
pub fn edge_population(coeffs: &[Complex64]) -> f64 {
    let sites = coeffs.len() / 4;
    let edge = 2.min(sites);
    let pop = |s: usize| coeffs[4 * s..4 * s + 4].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut total = 0.0;
    for s in 0..sites {
        if s < edge || s + edge >= sites {
            total += pop(s);
        }
    }
    total
}

/// Crank-Nicolson stepper for a fixed basis, laser, time step and frame.
#[derive(Debug, Clone)]
pub struct CnStepper {
    diagonal: Vec<f64>,
    blocks: Vec<Mat4>,
    blocks_adj: Vec<Mat4>,
    laser: KdLaser,
    consts: crate::units::PhysicalConstants,
    dt: f64,
    frame_energy: f64,
}

impl CnStepper {
    pub fn new(basis: &ModeBasis, laser: &KdLaser, dt: f64, frame_energy: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let blocks = coupling_blocks(basis, laser.e);
        Ok(Self {
            diagonal: diagonal_energies(basis, frame_energy),
            blocks_adj: blocks.iter().map(|b| b.adjoint()).collect(),
            blocks,
            laser: laser.clone(),
            consts: *basis.consts(),
            dt,
            frame_energy,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame_energy(&self) -> f64 {
        self.frame_energy
    }

    fn drive(&self, t: f64) -> f64 {
        self.laser.drive(t, &self.consts)
    }

    /// Factors `I + i dt/(2 hbar) M(t + dt/2)`.
    fn factor(&self, t: f64) -> Result<(BlockTridiagonalLu, f64)> {
        let s = self.drive(t + 0.5 * self.dt);
        let a = 0.5 * self.dt / self.consts.hbar;
        let sites = self.diagonal.len() / 4;
        let diag: Vec<Mat4> = (0..sites)
            .map(|i| Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|g, _| Complex64::new(1.0, a * self.diagonal[4 * i + g]))))
            .collect();
        let f = Complex64::new(0.0, a * s);
        let upper: Vec<Mat4> = self.blocks.iter().map(|b| b * f).collect();
        let lower: Vec<Mat4> = self.blocks_adj.iter().map(|b| b * f).collect();
        Ok((BlockTridiagonalLu::factor(&diag, &upper, &lower)?, s))
    }

    /// `out = (I - i dt/(2 hbar) M) x` with drive `s`.
    fn explicit_half(&self, x: &[Complex64], s: f64, out: &mut [Complex64]) {
        let a = 0.5 * self.dt / self.consts.hbar;
        for (o, (xi, d)) in out.iter_mut().zip(x.iter().zip(&self.diagonal)) {
            *o = xi * Complex64::new(1.0, -a * d);
        }
        let f = Complex64::new(0.0, -a * s);
        for (i, (b, ba)) in self.blocks.iter().zip(&self.blocks_adj).enumerate() {
            let (lo, hi) = (4 * i, 4 * i + 4);
            let xl = crate::algebra::Spinor::from_column_slice(&x[lo..hi]);
            let xh = crate::algebra::Spinor::from_column_slice(&x[hi..hi + 4]);
            let up = b * xh * f;
            let dn = ba * xl * f;
            for g in 0..4 {
                out[lo + g] += up[g];
                out[hi + g] += dn[g];
            }
        }
    }

    /// Advances one vector from `t` to `t + dt`.
    pub fn step(&self, c: &mut [Complex64], t: f64) -> Result<()> {
        let (lu, s) = self.factor(t)?;
        let mut rhs = vec![Complex64::new(0.0, 0.0); c.len()];
        self.explicit_half(c, s, &mut rhs);
        lu.solve_in_place(&mut rhs);
        c.copy_from_slice(&rhs);
        Ok(())
    }

    /// Advances every column of `cols` over `steps` steps starting at `t0`.
    /// Columns are processed in parallel chunks; each column's arithmetic is
    /// the same as in [`CnStepper::step`].
    pub fn propagate_columns(&self, cols: &mut DMatrix<Complex64>, t0: f64, steps: usize) -> Result<()> {
        let dim = cols.nrows();
        let ncols = cols.ncols();
        let chunk_cols = ncols.div_ceil(rayon::current_num_threads().max(1)).max(1);
        cols.as_mut_slice()
            .par_chunks_mut(dim * chunk_cols)
            .try_for_each(|chunk| -> Result<()> {
                let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
                for k in 0..steps {
                    let t = t0 + k as f64 * self.dt;
                    let (lu, s) = self.factor(t)?;
                    for col in chunk.chunks_mut(dim) {
                        self.explicit_half(col, s, &mut rhs);
                        lu.solve_in_place(&mut rhs);
                        col.copy_from_slice(&rhs);
                    }
                }
                Ok(())
            })
    }

    /// Dense propagator over `steps` steps from `t0`.
    pub fn operator(&self, dim: usize, t0: f64, steps: usize) -> Result<DMatrix<Complex64>> {
        let mut u = DMatrix::identity(dim, dim);
        self.propagate_columns(&mut u, t0, steps)?;
        Ok(u)
    }
}

/// One Crank-Nicolson step of `state` (in its own frame).
pub fn cn_step(state: &ModeState, basis: &ModeBasis, laser: &KdLaser, dt: f64) -> Result<ModeState> {
    let stepper = CnStepper::new(basis, laser, dt, state.frame_energy)?;
    let mut next = state.clone();
    stepper.step(&mut next.coeffs, state.t)?;
    next.t = state.t + dt;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Requested step; adjusted down so that an integer number of steps
    /// spans the pulse.
    pub dt: f64,
    /// Record every this many steps (the first and last states are always
    /// recorded).
    pub record_every: usize,
    /// Rotating-frame energy; `None` uses `E(p)`.
    pub frame_energy: Option<f64>,
}

/// Propagates the initial condition `c_0^{up+} = 1` over the whole pulse.
pub fn propagate_modes(basis: &ModeBasis, laser: &KdLaser, opts: &PropagateOptions) -> Result<Vec<ModeState>> {
    let total = laser.total_time();
    if !total.is_finite() {
        return Err(Error::InvalidParameter("laser pulse must have a finite duration".into()));
    }
    let steps = ((total / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = total / steps as f64;
    let mut state = match opts.frame_energy {
        Some(f) => ModeState::initial_in_frame(basis, f),
        None => ModeState::initial(basis),
    };
    let stepper = CnStepper::new(basis, laser, dt, state.frame_energy)?;
    let mut out = vec![state.clone()];
    for k in 0..steps {
        stepper.step(&mut state.coeffs, k as f64 * dt)?;
        state.t = (k + 1) as f64 * dt;
        let edge = edge_population(&state.coeffs);
        if edge > CUTOFF_TOLERANCE {
            return Err(Error::CutoffOverflow { population: edge });
        }
        if !state.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite { step: k + 1, time: state.t });
        }
        if (opts.record_every > 0 && (k + 1) % opts.record_every == 0) || k + 1 == steps {
            if out.last().map(|s| s.t) != Some(state.t) {
                out.push(state.clone());
            }
        }
    }
    Ok(out)
}

/// Runs `run` on `basis`, widening the ladder by `step` sites on each side
/// after every cutoff overflow, at most `max_extensions` times. Returns the
/// basis that succeeded together with the result.
pub fn with_cutoff_extension<T>(
    basis: &ModeBasis,
    step: i32,
    max_extensions: usize,
    mut run: impl FnMut(&ModeBasis) -> Result<T>,
) -> Result<(ModeBasis, T)> {
    let mut current = basis.clone();
    let mut extensions = 0;
    loop {
        match run(&current) {
            Err(Error::CutoffOverflow { population }) if extensions < max_extensions => {
                log::warn!(
                    "edge population {population:.3e} on ladder [{}, {}]; extending by {step}",
                    current.n_min(),
                    current.n_max()
                );
                current = current.extended(step)?;
                extensions += 1;
            }
            other => return other.map(|v| (current, v)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kapitza_dirac::system::{assemble_in_frame, KdLaser};
    use crate::potentials::Envelope;
    use crate::units::PhysicalConstants;
    use nalgebra::DVector;

    fn setup(amplitude: f64) -> (ModeBasis, KdLaser) {
        let c = PhysicalConstants::atomic();
        let k = [0.8, 0.0, 0.0];
        let tl = 2.0 * std::f64::consts::PI / (c.c * 0.8);
        let laser = KdLaser::new([0.0, 0.0, amplitude], k, Envelope::new(2.0, 3.0, tl).unwrap()).unwrap();
        let basis = ModeBasis::new([40.0, 0.0, 0.5], k, -3, 4, c).unwrap();
        (basis, laser)
    }

    #[test]
    fn diagonal_dynamics_is_a_cayley_phase() {
        let (basis, laser) = setup(0.0);
        let dt = 1e-7;
        let mut st = ModeState::initial_in_frame(&basis, 0.0);
        st.coeffs.iter_mut().for_each(|z| *z = Complex64::new(0.5, 0.0));
        let next = cn_step(&st, &basis, &laser, dt).unwrap();
        for s in 0..basis.sites() {
            for g in 0..4 {
                let e = if g < 2 { 1.0 } else { -1.0 } * basis.energy_at_site(s);
                let x = 0.5 * e * dt;
                let cayley = Complex64::new(1.0, -x) / Complex64::new(1.0, x);
                let got = next.coeffs[4 * s + g] / Complex64::new(0.5, 0.0);
                assert!((got - cayley).norm() < 1e-14);
                // Cayley phase vs exact exponential: error (e dt)^3 / 12
                let exact = Complex64::from_polar(1.0, -e * dt);
                assert!((got - exact).norm() <= (e * dt).abs().powi(3) / 12.0 * 1.01 + 1e-14);
            }
        }
    }

    #[test]
    fn step_is_unitary_and_matches_dense_solve() {
        let (basis, laser) = setup(500.0);
        let tl = laser.period(basis.consts());
        let dt = tl / 64.0;
        let mut st = ModeState::initial(&basis);
        st.t = 2.3 * tl;
        st.coeffs[5] = Complex64::new(0.3, -0.2);
        let n0 = st.norm_sq();
        let next = cn_step(&st, &basis, &laser, dt).unwrap();
        assert!((next.norm_sq() - n0).abs() < 1e-12 * n0);
        let m = assemble_in_frame(&basis, &laser, st.t + 0.5 * dt, st.frame_energy).to_dense();
        let id = DMatrix::<Complex64>::identity(basis.dim(), basis.dim());
        let a = &id + &m * Complex64::new(0.0, 0.5 * dt);
        let b = &id - &m * Complex64::new(0.0, 0.5 * dt);
        let x = a.lu().solve(&(b * DVector::from_vec(st.coeffs.clone()))).unwrap();
        for i in 0..basis.dim() {
            assert!((x[i] - next.coeffs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn half_steps_agree_to_third_order() {
        let (basis, laser) = setup(800.0);
        let tl = laser.period(basis.consts());
        let mut st = ModeState::initial(&basis);
        st.t = 2.5 * tl;
        let mut errs = Vec::new();
        // Steps must resolve the 2mc^2 gap to the negative-energy modes.
        for dt in [tl / 32768.0, tl / 65536.0] {
            let full = cn_step(&st, &basis, &laser, dt).unwrap();
            let half = cn_step(&cn_step(&st, &basis, &laser, 0.5 * dt).unwrap(), &basis, &laser, 0.5 * dt).unwrap();
            let e: f64 = full.coeffs.iter().zip(&half.coeffs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            errs.push(e);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 2.7 && order < 3.3, "local order {order}");
    }

    #[test]
    fn zero_amplitude_keeps_initial_occupation() {
        let (basis, laser) = setup(0.0);
        let tl = laser.period(basis.consts());
        let traj = propagate_modes(&basis, &laser, &PropagateOptions { dt: tl / 64.0, record_every: 16, frame_energy: None }).unwrap();
        for st in &traj {
            let occ = occupations(st, &basis);
            assert!((occ.at(0).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((traj.last().unwrap().t - laser.total_time()).abs() < 1e-12);
    }

    #[test]
    fn column_propagation_matches_single_steps() {
        let (basis, laser) = setup(600.0);
        let tl = laser.period(basis.consts());
        let stepper = CnStepper::new(&basis, &laser, tl / 32.0, 0.0).unwrap();
        let u = stepper.operator(basis.dim(), 0.0, 40).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
        v[3] = Complex64::new(1.0, 0.0);
        for k in 0..40 {
            stepper.step(&mut v, k as f64 * tl / 32.0).unwrap();
        }
        for i in 0..basis.dim() {
            assert_eq!(u[(i, 3)], v[i]);
        }
    }

    #[test]
    fn extension_retries_until_success() {
        let (basis, _) = setup(0.0);
        let (b, sites) = with_cutoff_extension(&basis, 2, 3, |b| {
            if b.sites() < 14 {
                Err(Error::CutoffOverflow { population: 1.0 })
            } else {
                Ok(b.sites())
            }
        })
        .unwrap();
        assert_eq!((b.n_min(), b.n_max(), sites), (-7, 8, 16));
        let r = with_cutoff_extension(&basis, 1, 1, |_| -> Result<()> { Err(Error::CutoffOverflow { population: 1.0 }) });
        assert!(matches!(r, Err(Error::CutoffOverflow { .. })));
    }

    #[test]
    fn cutoff_overflow_detected() {
        let c = PhysicalConstants::atomic();
        let k = [0.8, 0.0, 0.0];
        let tl = 2.0 * std::f64::consts::PI / (c.c * 0.8);
        let laser = KdLaser::new([0.0, 0.0, 3e4], k, Envelope::new(1.0, 2.0, tl).unwrap()).unwrap();
        let basis = ModeBasis::new([0.0, 0.0, 0.0], k, -1, 1, c).unwrap();
        let r = propagate_modes(&basis, &laser, &PropagateOptions { dt: tl / 64.0, record_every: 0, frame_energy: None });
        assert!(matches!(r, Err(Error::CutoffOverflow { .. })));
    }
}
