//! Adaptive composite Gauss-Legendre integration.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::{Error, Result};

/// Adaptive integrator: each panel is accepted when the rule on the panel
/// and on its two halves agree to the panel's share of the tolerance.
#[derive(Debug, Clone)]
pub struct AdaptiveGauss {
    rule: GaussLegendre,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl AdaptiveGauss {
    pub fn new(degree: usize, rel_tol: f64) -> Self {
        Self {
            rule: GaussLegendre::new(NonZeroUsize::new(degree.max(2)).expect("degree >= 2")),
            rel_tol,
            abs_tol: 0.0,
            max_panels: 1 << 16,
        }
    }

    /// Fixed rule on `[a, b]` split into `panels` equal panels.
    pub fn composite(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| self.rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, f))
            .sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let whole = self.composite(&f, a, b, 8);
        let scale = whole.abs();
        let span = (b - a).abs();
        let mut stack: Vec<(f64, f64, f64)> = Vec::new();
        let h = (b - a) / 8.0;
        for i in 0..8 {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            stack.push((lo, hi, self.rule.integrate(lo, hi, &f)));
        }
        let mut total = 0.0;
        let mut panels = 0usize;
        while let Some((lo, hi, coarse)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.rule.integrate(lo, mid, &f);
            let right = self.rule.integrate(mid, hi, &f);
            let fine = left + right;
            if !fine.is_finite() {
                return Err(Error::Quadrature(format!("non-finite integrand on [{lo}, {hi}]")));
            }
            let share = (hi - lo).abs() / span;
            let tol = (self.rel_tol * scale.max(fine.abs())).max(self.abs_tol) * share;
            if (fine - coarse).abs() <= tol || mid == lo || mid == hi {
                total += fine;
                continue;
            }
            panels += 1;
            if panels > self.max_panels {
                return Err(Error::Quadrature(format!("more than {} panel splits", self.max_panels)));
            }
            stack.push((lo, mid, left));
            stack.push((mid, hi, right));
        }
        Ok(total)
    }
}

/// Integral of `f` over `[a, b]` to relative tolerance `rel_tol` with a
/// 20-point rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    AdaptiveGauss::new(20, rel_tol).integrate(f, a, b)
}
