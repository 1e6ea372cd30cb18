//! Scalar root finding and minimization.

use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection on a bracketing interval `[lo, hi]` with `f(lo) f(hi) <= 0`.
/// Stops when the interval is below `tol` or cannot shrink further in
/// floating point.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::RootFinder(format!(
            "interval [{lo}, {hi}] does not bracket a root (f = {flo}, {fhi})"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(x_min, f(x_min))`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coarse scan on `points` equally spaced abscissae followed by golden-section
/// refinement around the best sample. Errors with [`Error::ScanBoundary`] if
/// the best sample sits on either end of the range.
pub fn scan_then_refine_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize, tol: f64) -> Result<(f64, f64)> {
    let points = points.max(3);
    let h = (hi - lo) / (points - 1) as f64;
    let samples: Vec<f64> = (0..points).map(|i| f(lo + i as f64 * h)).collect();
    let best = samples
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::RootFinder("objective not finite anywhere on the scan".into()))?;
    if best == 0 || best == points - 1 {
        return Err(Error::ScanBoundary(lo + best as f64 * h));
    }
    let a = lo + (best - 1) as f64 * h;
    let b = lo + (best + 1) as f64 * h;
    Ok(golden_section_min(|x| {
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    }, a, b, tol))
}
