//! Generalized Bragg condition for multiphoton Kapitza-Dirac scattering.
//!
//! An electron absorbs `n_r` photons from the beam travelling along `+k` and
//! `n_l` from the beam along `-k` (negative numbers mean emission). With
//! `lambda_p = 2 pi hbar / |p|` and `theta` the angle between `p` and `k`,
//! energy and momentum conservation read
//!
//! ```text
//! cos(theta) / lambda_p = -(n_r - n_l) / (2 lambda)
//!     + sgn(n_r - n_l) (n_r + n_l) / 2
//!       * sqrt(1/lambda^2 - (sin^2(theta)/lambda_p^2 + 1/lambda_C^2) / (n_r n_l))
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use crate::optimize::bisect;
use crate::units::PhysicalConstants;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BraggSolution {
    pub n_r: i32,
    pub n_l: i32,
    /// Momentum magnitude in atomic units.
    pub p_mag: f64,
    /// Angle between `p` and `k` in radians.
    pub theta: f64,
    pub residual: f64,
}

fn check_orders(n_r: i32, n_l: i32) -> Result<()> {
    if n_r == 0 || n_l == 0 {
        return Err(Error::Bragg(format!("photon numbers must be nonzero, got n_r = {n_r}, n_l = {n_l}")));
    }
    if n_r == n_l {
        return Err(Error::Bragg(format!("n_r and n_l must differ, got {n_r}")));
    }
    Ok(())
}

/// `cos(theta)/lambda_p` minus the right-hand side of the Bragg condition.
/// `lambda` is the laser wavelength.
pub fn bragg_residual(n_r: i32, n_l: i32, theta: f64, p_mag: f64, lambda: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_orders(n_r, n_l)?;
    if !(p_mag > 0.0 && lambda > 0.0) {
        return Err(Error::Bragg(format!("momentum and wavelength must be positive, got {p_mag}, {lambda}")));
    }
    let inv_lp = p_mag / (2.0 * PI * consts.hbar);
    let inv_lc = 1.0 / consts.compton_wavelength();
    let (nr, nl) = (n_r as f64, n_l as f64);
    let radicand = 1.0 / (lambda * lambda) - ((theta.sin() * inv_lp).powi(2) + inv_lc * inv_lc) / (nr * nl);
    if radicand < 0.0 {
        return Err(Error::Bragg(format!("no kinematically allowed solution (radicand {radicand:e})")));
    }
    let rhs = -(nr - nl) / (2.0 * lambda) + (nr - nl).signum() * 0.5 * (nr + nl) * radicand.sqrt();
    Ok(theta.cos() * inv_lp - rhs)
}

/// Momentum magnitude solving the Bragg condition at fixed angle.
/// Searches `|p|` between `1e-4 mc` and `1e4 mc` and returns the smallest
/// root.
pub fn bragg_momentum(n_r: i32, n_l: i32, theta: f64, lambda: f64, consts: &PhysicalConstants) -> Result<BraggSolution> {
    check_orders(n_r, n_l)?;
    let mc = consts.mass * consts.c;
    let f = |p: f64| bragg_residual(n_r, n_l, theta, p, lambda, consts).unwrap_or(f64::NAN);
    let samples = 2001;
    let (lo, hi) = ((1e-4 * mc).ln(), (1e4 * mc).ln());
    let at = |i: usize| (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp();
    let mut prev = (at(0), f(at(0)));
    for i in 1..samples {
        let cur = (at(i), f(at(i)));
        if prev.1.is_finite() && cur.1.is_finite() && prev.1.signum() != cur.1.signum() {
            let p = bisect(f, prev.0, cur.0, 0.0)?;
            return Ok(BraggSolution {
                n_r,
                n_l,
                p_mag: p,
                theta,
                residual: f(p),
            });
        }
        prev = cur;
    }
    Err(Error::Bragg(format!("no momentum solves the condition for n_r = {n_r}, n_l = {n_l} at theta = {theta}")))
}

/// Angle in `[0, pi]` solving the Bragg condition at fixed momentum; the
/// smallest root is returned.
pub fn bragg_angle(n_r: i32, n_l: i32, p_mag: f64, lambda: f64, consts: &PhysicalConstants) -> Result<BraggSolution> {
    check_orders(n_r, n_l)?;
    let f = |th: f64| bragg_residual(n_r, n_l, th, p_mag, lambda, consts).unwrap_or(f64::NAN);
    let samples = 3601;
    let at = |i: usize| PI * i as f64 / (samples - 1) as f64;
    let mut prev = (0.0, f(0.0));
    if prev.1 == 0.0 {
        return Ok(BraggSolution { n_r, n_l, p_mag, theta: 0.0, residual: 0.0 });
    }
    for i in 1..samples {
        let cur = (at(i), f(at(i)));
        if prev.1.is_finite() && cur.1.is_finite() && prev.1.signum() != cur.1.signum() {
            let th = bisect(f, prev.0, cur.0, 0.0)?;
            return Ok(BraggSolution {
                n_r,
                n_l,
                p_mag,
                theta: th,
                residual: f(th),
            });
        }
        prev = cur;
    }
    Err(Error::Bragg(format!("no angle solves the condition for n_r = {n_r}, n_l = {n_l} at |p| = {p_mag}")))
}
