//! Uniform periodic grids in one or two dimensions.
//!
//! Axis 0 is the physical `x` direction. In two dimensions axis 1 is the
//! physical `z` direction, so a 2-D grid spans the polarization/propagation
//! plane of a laser travelling along `z`. Storage is row-major with axis 0
//! slowest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::vec3::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    extent: f64,
}

/// Relative tolerance used to decide whether a momentum sits on the lattice.
const LATTICE_TOL: f64 = 1e-9;

impl Grid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 points per axis, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        Ok(Self { dim, n, extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.extent.powi(self.dim as i32)
    }

    /// Coordinates along one axis, `-L/2 + j dx`.
    pub fn axis_coords(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.n).map(|j| -0.5 * self.extent + j as f64 * dx).collect()
    }

    /// Signed lattice index for FFT-ordered slot `idx`: `0..n/2` then negative.
    pub fn signed_index(&self, idx: usize) -> i64 {
        if idx <= (self.n - 1) / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Wave numbers `2 pi j / L` in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|idx| 2.0 * PI * self.signed_index(idx) as f64 / self.extent)
            .collect()
    }

    /// Axis indices of a flat point index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    /// Physical position of a flat point index (`y` is always zero).
    pub fn position(&self, flat: usize) -> Vec3 {
        let dx = self.spacing();
        let half = 0.5 * self.extent;
        let [i, j] = self.unflatten(flat);
        let x = -half + i as f64 * dx;
        if self.dim == 1 {
            [x, 0.0, 0.0]
        } else {
            [x, 0.0, -half + j as f64 * dx]
        }
    }

    /// Wave vector of a flat index in momentum space (FFT order).
    pub fn wavevector(&self, flat: usize) -> Vec3 {
        let [i, j] = self.unflatten(flat);
        let dk = 2.0 * PI / self.extent;
        let kx = self.signed_index(i) as f64 * dk;
        if self.dim == 1 {
            [kx, 0.0, 0.0]
        } else {
            [kx, 0.0, self.signed_index(j) as f64 * dk]
        }
    }

    /// Flat momentum-space slot holding wave vector `k` (one entry per axis),
    /// or an error if `k` is off the lattice.
    pub fn lattice_slot(&self, k: &[f64]) -> Result<usize> {
        if k.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "momentum has {} components, grid has dimension {}",
                k.len(),
                self.dim
            )));
        }
        let dk = 2.0 * PI / self.extent;
        let mut slot = 0usize;
        for &ka in k {
            let j = ka / dk;
            let jr = j.round();
            if (j - jr).abs() > LATTICE_TOL * j.abs().max(1.0) {
                return Err(Error::OffLattice(k.to_vec()));
            }
            let lo = -(self.n as i64) / 2;
            let hi = (self.n as i64 - 1) / 2;
            let ji = jr as i64;
            if ji < lo || ji > hi {
                return Err(Error::OffLattice(k.to_vec()));
            }
            let idx = ji.rem_euclid(self.n as i64) as usize;
            slot = slot * self.n + idx;
        }
        Ok(slot)
    }
}

/// Free-function constructor mirroring [`Grid::new`].
pub fn make_grid(dim: usize, n: usize, extent: f64) -> Result<Grid> {
    Grid::new(dim, n, extent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_lattice() {
        let g = make_grid(1, 8, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let mut js: Vec<i64> = (0..8).map(|i| g.signed_index(i)).collect();
        js.sort();
        assert_eq!(js, (-4..=3).collect::<Vec<_>>());
        let k = g.wavenumbers();
        assert!((k[1] - 2.0 * PI / 8.0).abs() < 1e-15);
        assert!((k[4] + PI).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_spacing() {
        let g = make_grid(2, 256, 100.0).unwrap();
        assert_eq!(g.spacing(), 0.390625);
        assert_eq!(g.len(), 65536);
        let p = g.position(257);
        assert_eq!(p, [-50.0 + 0.390625, 0.0, -50.0 + 0.390625]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(1, 3, 8.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
        assert!(make_grid(1, 8, -1.0).is_err());
        assert!(make_grid(3, 8, 1.0).is_err());
    }

    #[test]
    fn lattice_lookup() {
        let g = make_grid(2, 16, 2.0 * PI).unwrap();
        let slot = g.lattice_slot(&[3.0, -2.0]).unwrap();
        assert_eq!(g.wavevector(slot), [3.0, 0.0, -2.0]);
        assert!(matches!(g.lattice_slot(&[0.5, 0.0]), Err(Error::OffLattice(_))));
        assert!(matches!(g.lattice_slot(&[9.0, 0.0]), Err(Error::OffLattice(_))));
    }
}
