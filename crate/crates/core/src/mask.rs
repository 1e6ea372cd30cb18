//! Multiplicative absorbing boundary mask.

use crate::grid::Grid;

/// Fraction of each axis (per side) covered by the absorbing ramp.
pub const RAMP_FRACTION: f64 = 0.1;

/// `cos^(1/8)` ramp over the outer 10% of every axis, 1 in the interior.
pub fn absorbing_mask(grid: &Grid) -> Vec<f64> {
    let half = 0.5 * grid.extent();
    let width = RAMP_FRACTION * grid.extent();
    let inner = half - width;
    let axis: Vec<f64> = grid
        .axis_coords()
        .into_iter()
        .map(|x| {
            let d = x.abs() - inner;
            if d <= 0.0 {
                1.0
            } else {
                let arg = (0.5 * std::f64::consts::PI * d / width).min(0.5 * std::f64::consts::PI);
                arg.cos().max(0.0).powf(0.125)
            }
        })
        .collect();
    (0..grid.len())
        .map(|flat| {
            let [i, j] = grid.unflatten(flat);
            if grid.dim() == 1 {
                axis[i]
            } else {
                axis[i] * axis[j]
            }
        })
        .collect()
}
