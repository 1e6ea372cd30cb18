//! Rabi-cycle analysis: interaction-time scans, period extraction and
//! resonance tuning.
//!
//! A scan varies the flat-top duration at fixed sin^2 ramps. The propagator
//! over one flat laser period does not depend on which period it is, so a
//! scan needs one ramp-up run, one dense flat-period operator `U_P` and one
//! dense ramp-down operator `U_D`: the final state after `F` flat cycles is
//! `U_D U_P^F psi_up`.

use std::f64::consts::PI;

use nalgebra::{DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;

use super::evolve::{edge_population, occupations, CnStepper, ModeState, Occupations, CUTOFF_TOLERANCE};
use super::system::{KdLaser, ModeBasis};
use crate::optimize::bisect;
use crate::potentials::Envelope;
use crate::vec3::{norm, scale};
use crate::{Error, Result};

/// Minimum peak-to-peak variation accepted as an oscillation.
const MIN_VARIATION: f64 = 1e-3;

/// Floquet eigenphases closer than this are treated as degenerate.
const CLUSTER_PHASE: f64 = 1e-8;

/// Rabi period from a sampled transfer probability `y(T)`.
///
/// Takes the first local maximum that reaches at least half the global
/// maximum, refines it with the vertex of the parabola through the peak and
/// its neighbours, and returns twice the peak time.
pub fn rabi_period(times: &[f64], transfer: &[f64]) -> Result<f64> {
    if times.len() != transfer.len() || times.len() < 3 {
        return Err(Error::InvalidParameter("need at least three (T, transfer) samples of equal length".into()));
    }
    let max = transfer.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = transfer.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max - min >= MIN_VARIATION) {
        return Err(Error::NoOscillation);
    }
    let i = (1..transfer.len() - 1)
        .find(|&i| transfer[i] >= 0.5 * max && transfer[i] > transfer[i - 1] && transfer[i] >= transfer[i + 1])
        .ok_or(Error::NoOscillation)?;
    let (x0, x1, x2) = (times[i - 1], times[i], times[i + 1]);
    let (y0, y1, y2) = (transfer[i - 1], transfer[i], transfer[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    let peak = if curv < 0.0 {
        (0.5 * (x0 + x1) - 0.5 * d01 / curv).clamp(x0, x2)
    } else {
        x1
    };
    Ok(2.0 * peak)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Flat-top durations in laser periods.
    pub flat_cycles: Vec<u64>,
    /// Time steps per laser period.
    pub steps_per_cycle: usize,
    /// Ladder site whose occupation is the transfer probability.
    pub n_target: i32,
    /// Rotating-frame energy; `None` uses the midpoint of `E(p)` and
    /// `E(p + n_target hbar k)`.
    pub frame_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub flat_cycles: u64,
    /// Total interaction time `T` including both ramps.
    pub interaction_time: f64,
    pub occupations: Occupations,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiScan {
    pub n_target: i32,
    pub laser_period: f64,
    pub points: Vec<ScanPoint>,
}

impl RabiScan {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.interaction_time).collect()
    }

    pub fn transfer(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.occupations.at(self.n_target).unwrap_or(0.0))
            .collect()
    }

    /// Largest transfer probability and the interaction time where it occurs.
    pub fn peak(&self) -> (f64, f64) {
        self.points
            .iter()
            .map(|p| (p.occupations.at(self.n_target).unwrap_or(0.0), p.interaction_time))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn rabi_period(&self) -> Result<f64> {
        rabi_period(&self.times(), &self.transfer())
    }
}

fn default_frame(basis: &ModeBasis, n_target: i32) -> Result<f64> {
    let s0 = basis.site(0).ok_or_else(|| Error::InvalidParameter("ladder must contain n = 0".into()))?;
    let s1 = basis
        .site(n_target)
        .ok_or_else(|| Error::InvalidParameter(format!("target n = {n_target} outside the ladder")))?;
    Ok(0.5 * (basis.energy_at_site(s0) + basis.energy_at_site(s1)))
}

fn ramp_steps(laser: &KdLaser, steps_per_cycle: usize) -> Result<usize> {
    if steps_per_cycle == 0 {
        return Err(Error::InvalidParameter("steps_per_cycle must be positive".into()));
    }
    let exact = laser.envelope.ramp_cycles * steps_per_cycle as f64;
    let steps = exact.round();
    if (exact - steps).abs() > 1e-9 * exact.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "ramp of {} cycles is not a whole number of steps at {steps_per_cycle} steps per cycle",
            laser.envelope.ramp_cycles
        )));
    }
    Ok(steps as usize)
}

fn with_envelope(laser: &KdLaser, flat_cycles: f64) -> Result<KdLaser> {
    let env = Envelope::new(laser.envelope.ramp_cycles, flat_cycles, laser.envelope.period)?;
    KdLaser::new(laser.e, laser.k, env)
}

fn check_edges(coeffs: &[Complex64]) -> Result<()> {
    let edge = edge_population(coeffs);
    if edge > CUTOFF_TOLERANCE {
        return Err(Error::CutoffOverflow { population: edge });
    }
    Ok(())
}

/// Final occupations after ramp-up, `F` flat cycles and ramp-down for every
/// `F` in `opts.flat_cycles`. The envelope period of `laser` must equal the
/// laser period so that flat cycles are periodic in the drive.
pub fn rabi_scan(basis: &ModeBasis, laser: &KdLaser, opts: &ScanOptions) -> Result<RabiScan> {
    let consts = *basis.consts();
    let tl = laser.period(&consts);
    if ((laser.envelope.period - tl) / tl).abs() > 1e-12 {
        return Err(Error::InvalidParameter("envelope period must equal the laser period".into()));
    }
    let nr = ramp_steps(laser, opts.steps_per_cycle)?;
    let dt = tl / opts.steps_per_cycle as f64;
    let frame = match opts.frame_energy {
        Some(f) => f,
        None => default_frame(basis, opts.n_target)?,
    };
    let mut flats = opts.flat_cycles.clone();
    flats.sort_unstable();
    flats.dedup();
    let max_flat = flats.last().copied().unwrap_or(0);

    let up = CnStepper::new(basis, &with_envelope(laser, max_flat as f64 + 1.0)?, dt, frame)?;
    let down = CnStepper::new(basis, &with_envelope(laser, 0.0)?, dt, frame)?;
    let t_ramp = nr as f64 * dt;

    let mut state = ModeState::initial_in_frame(basis, frame);
    for k in 0..nr {
        up.step(&mut state.coeffs, k as f64 * dt)?;
        check_edges(&state.coeffs)?;
    }
    let u_p = up.operator(basis.dim(), t_ramp, opts.steps_per_cycle)?;
    let u_d = down.operator(basis.dim(), t_ramp, nr)?;

    let mut v = DVector::from_vec(state.coeffs);
    let mut done = 0u64;
    let mut points = Vec::with_capacity(flats.len());
    for &f in &flats {
        while done < f {
            v = &u_p * &v;
            check_edges(v.as_slice())?;
            done += 1;
        }
        let out = &u_d * &v;
        check_edges(out.as_slice())?;
        let t = 2.0 * t_ramp + f as f64 * tl;
        let st = ModeState {
            coeffs: out.as_slice().to_vec(),
            t,
            frame_energy: frame,
        };
        points.push(ScanPoint {
            flat_cycles: f,
            interaction_time: t,
            norm: st.norm_sq(),
            occupations: occupations(&st, basis),
        });
    }
    Ok(RabiScan {
        n_target: opts.n_target,
        laser_period: tl,
        points,
    })
}

/// Two-level reduction of the flat-top Floquet operator around the initial
/// mode `(0, up+)` and the target ladder site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloquetResonance {
    /// Signed detuning of the dressed initial mode from the dressed target
    /// mode (energy units, wrapped to a photon energy).
    pub detuning: f64,
    /// Quasienergy splitting of the two dressed states with the largest
    /// overlap with the initial mode and the target site.
    pub splitting: f64,
}

impl FloquetResonance {
    /// Rabi period `2 pi hbar / splitting` of the pair.
    pub fn rabi_period(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / self.splitting
    }
}

/// Diagonalizes the one-period flat-top propagator and returns the signed
/// detuning of the dressed states coupling `(0, up+)` to site `n_target`.
pub fn floquet_resonance(
    basis: &ModeBasis,
    laser: &KdLaser,
    steps_per_cycle: usize,
    n_target: i32,
) -> Result<FloquetResonance> {
    let consts = *basis.consts();
    let tl = laser.period(&consts);
    let frame = default_frame(basis, n_target)?;
    let flat = with_envelope(laser, 2.0)?;
    let dt = tl / steps_per_cycle as f64;
    let stepper = CnStepper::new(basis, &flat, dt, frame)?;
    let t0 = flat.envelope.ramp_time();
    let u = stepper.operator(basis.dim(), t0, steps_per_cycle)?;
    let (q, t) = Schur::try_new(u, 1e-14, 10_000)
        .ok_or_else(|| Error::RootFinder("Floquet diagonalization did not converge".into()))?
        .unpack();
    let i0 = basis.index(0, 0).expect("ladder contains n = 0");
    let target = basis
        .site(n_target)
        .ok_or_else(|| Error::InvalidParameter(format!("target n = {n_target} outside the ladder")))?;
    let dim = basis.dim();

    // Group eigenvectors into (nearly) degenerate clusters; projectors onto
    // clusters do not depend on how Schur mixes degenerate eigenvectors.
    let mut order: Vec<(f64, usize)> = (0..dim).map(|j| (-t[(j, j)].arg(), j)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for (phase, j) in order {
        match clusters.last_mut() {
            Some((p, members)) if phase - *p < CLUSTER_PHASE => members.push(j),
            _ => clusters.push((phase, vec![j])),
        }
    }
    if clusters.len() > 1 {
        let first = clusters[0].0;
        let last = clusters.last().map(|c| c.0).unwrap_or(first);
        if first + 2.0 * PI - last < CLUSTER_PHASE {
            let (_, members) = clusters.pop().expect("checked length");
            clusters[0].1.extend(members);
        }
    }
    // g_C = P_C |0 up+>; its initial-mode weight and its weight on the
    // positive-energy target modes.
    let stats: Vec<(f64, f64, f64)> = clusters
        .iter()
        .map(|(phase, members)| {
            let g: Vec<Complex64> = (0..dim)
                .map(|r| members.iter().map(|&j| q[(r, j)] * q[(i0, j)].conj()).sum())
                .collect();
            let w0 = g[i0].re;
            let wt = (0..2).map(|k| g[4 * target + k].norm_sqr()).sum::<f64>();
            (*phase, w0, wt)
        })
        .collect();
    let mut ranked: Vec<usize> = (0..stats.len()).collect();
    ranked.sort_by(|&a, &b| stats[b].2.total_cmp(&stats[a].2));
    if ranked.len() < 2 {
        return Err(Error::RootFinder("Floquet spectrum has fewer than two quasienergies".into()));
    }
    let (a, b) = (stats[ranked[0]], stats[ranked[1]]);
    let mut dphi = a.0 - b.0;
    dphi -= 2.0 * PI * (dphi / (2.0 * PI)).round();
    let gap = consts.hbar * dphi / tl;
    let f = a.1 / (a.1 + b.1);
    Ok(FloquetResonance {
        detuning: gap * (2.0 * f - 1.0),
        splitting: gap.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    /// Half-width of the `|p|` search window around the basis momentum.
    pub half_width: f64,
    /// Coarse samples across the window.
    pub points: usize,
    pub steps_per_cycle: usize,
    pub n_target: i32,
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    /// Basis rebuilt at the resonant momentum.
    pub basis: ModeBasis,
    pub p_mag: f64,
    pub resonance: FloquetResonance,
}

/// Adjusts `|p|` at fixed direction so that the dressed initial and target
/// modes are degenerate during the flat top. Field-free Bragg momenta are
/// shifted by the light shift of the dressed modes; this finds the shifted
/// resonance.
pub fn tune_resonance(basis: &ModeBasis, laser: &KdLaser, opts: &TuneOptions) -> Result<TuneResult> {
    let p0 = basis.p();
    let pm = norm(p0);
    if !(pm > 0.0) {
        return Err(Error::InvalidParameter("resonance tuning needs a nonzero base momentum".into()));
    }
    let dir = scale(p0, 1.0 / pm);
    let at = |p: f64| ModeBasis::new(scale(dir, p), basis.k(), basis.n_min(), basis.n_max(), *basis.consts());
    let detuning = |p: f64| -> f64 {
        at(p).and_then(|b| floquet_resonance(&b, laser, opts.steps_per_cycle, opts.n_target))
            .map(|r| r.detuning)
            .unwrap_or(f64::NAN)
    };
    let points = opts.points.max(3);
    let lo = pm - opts.half_width;
    let step = 2.0 * opts.half_width / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| lo + i as f64 * step).collect();
    let ys: Vec<f64> = xs.iter().map(|&p| detuning(p)).collect();
    // Prefer the sign change with the smallest jump: continuous crossings
    // rather than quasienergy wraps.
    let bracket = (1..points)
        .filter(|&i| ys[i - 1].is_finite() && ys[i].is_finite() && ys[i - 1].signum() != ys[i].signum())
        .min_by(|&i, &j| (ys[i - 1].abs() + ys[i].abs()).total_cmp(&(ys[j - 1].abs() + ys[j].abs())))
        .ok_or_else(|| Error::RootFinder(format!("no resonance within |p| = {pm} +- {}", opts.half_width)))?;
    let p = bisect(detuning, xs[bracket - 1], xs[bracket], 1e-12 * pm)?;
    let tuned = at(p)?;
    let resonance = floquet_resonance(&tuned, laser, opts.steps_per_cycle, opts.n_target)?;
    Ok(TuneResult {
        basis: tuned,
        p_mag: p,
        resonance,
    })
}
