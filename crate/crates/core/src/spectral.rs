//! Unitary discrete Fourier transforms of grid fields.
//!
//! Both directions carry a `1/sqrt(N)` factor so that the transform is
//! unitary and Parseval holds without bookkeeping. Momentum-space data are in
//! FFT order, matching [`Grid::wavevector`].

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::field::Field;
use crate::grid::Grid;

/// Point count above which rows are transformed in parallel.
const PARALLEL_POINTS: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Cached FFT plans for one grid shape.
pub struct SpectralPlan {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("grid", &self.grid).finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n());
        let inverse = planner.plan_fft_inverse(grid.n());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid: *grid,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Transforms one component stored on this plan's grid in place.
    pub fn transform_slice(&mut self, data: &mut [Complex64], direction: Direction) {
        assert_eq!(data.len(), self.grid.len(), "slice does not match plan grid");
        let fft = match direction {
            Direction::Forward => Arc::clone(&self.forward),
            Direction::Inverse => Arc::clone(&self.inverse),
        };
        let n = self.grid.n();
        self.rows(&*fft, data);
        if self.grid.dim() == 2 {
            transpose_square(data, n);
            self.rows(&*fft, data);
            transpose_square(data, n);
        }
        let s = 1.0 / (self.grid.len() as f64).sqrt();
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    fn rows(&mut self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        let n = self.grid.n();
        if data.len() >= PARALLEL_POINTS && data.len() > n {
            let scratch_len = fft.get_inplace_scratch_len();
            let rows_per_chunk = (PARALLEL_POINTS / n).max(1);
            data.par_chunks_mut(rows_per_chunk * n).for_each(|chunk| {
                let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
                fft.process_with_scratch(chunk, &mut scratch);
            });
        } else {
            fft.process_with_scratch(data, &mut self.scratch);
        }
    }

    pub fn transform<const C: usize>(&mut self, field: &mut Field<C>, direction: Direction) {
        assert_eq!(field.grid(), &self.grid, "field does not match plan grid");
        for comp in field.components_mut().iter_mut() {
            self.transform_slice(comp, direction);
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Applies the unitary DFT componentwise and returns the transformed field.
pub fn spectral_transform<const C: usize>(field: &Field<C>, direction: Direction) -> Field<C> {
    let mut plan = SpectralPlan::new(field.grid());
    let mut out = field.clone();
    plan.transform(&mut out, direction);
    out
}
