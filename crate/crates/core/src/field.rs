//! Multi-component complex fields on a [`Grid`].
//!
//! Data are stored one contiguous vector per component, which is what the
//! FFTs want. At the interface (point accessors, snapshots) a field reads as
//! component-major per point.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::Grid;
use crate::vec3::Vec3;
use crate::{Error, Result};

/// Point count from which pointwise maps run in parallel.
const PARALLEL_POINTS: usize = 1 << 14;
const POINT_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Field<const C: usize> {
    grid: Grid,
    comps: [Vec<Complex64>; C],
}

/// Four-component Dirac wave function.
pub type SpinorField = Field<4>;
/// Two-component Feshbach-Villars Klein-Gordon wave function.
pub type PairField = Field<2>;

/// Weight matrix of the inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Identity,
    /// `diag(1, -1)`, the Klein-Gordon charge metric.
    Sigma3,
}

impl<const C: usize> Field<C> {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            comps: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]),
        }
    }

    /// Like [`Field::zeros`] but reports allocation failure instead of
    /// aborting.
    pub fn try_zeros(grid: Grid) -> Result<Self> {
        let n = grid.len();
        let mut comps: [Vec<Complex64>; C] = std::array::from_fn(|_| Vec::new());
        for c in comps.iter_mut() {
            c.try_reserve_exact(n)
                .map_err(|_| Error::Allocation(n.saturating_mul(C * std::mem::size_of::<Complex64>())))?;
            c.resize(n, Complex64::new(0.0, 0.0));
        }
        Ok(Self { grid, comps })
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(Vec3) -> [Complex64; C]) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            out.set(i, f(grid.position(i)));
        }
        out
    }

    pub fn from_components(grid: Grid, comps: [Vec<Complex64>; C]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidParameter(format!(
                "component length does not match grid size {}",
                grid.len()
            )));
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<Complex64>; C] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; C] {
        &mut self.comps
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn at(&self, i: usize) -> [Complex64; C] {
        std::array::from_fn(|c| self.comps[c][i])
    }

    pub fn set(&mut self, i: usize, v: [Complex64; C]) {
        for (c, z) in v.into_iter().enumerate() {
            self.comps[c][i] = z;
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for comp in self.comps.iter_mut() {
            for z in comp.iter_mut() {
                *z *= s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Replaces every point value by `f(flat_index, value)`. Large fields are
    /// processed in parallel; the result does not depend on the split.
    pub fn map_points(&mut self, f: impl Fn(usize, [Complex64; C]) -> [Complex64; C] + Sync) {
        let n = self.grid.len();
        let chunk = if n >= PARALLEL_POINTS { POINT_CHUNK } else { n.max(1) };
        let mut iters = self.comps.each_mut().map(|v| v.chunks_mut(chunk));
        let mut chunks: Vec<[&mut [Complex64]; C]> = Vec::with_capacity(n.div_ceil(chunk));
        loop {
            let next: [Option<&mut [Complex64]>; C] = std::array::from_fn(|c| iters[c].next());
            if next.iter().any(|s| s.is_none()) {
                break;
            }
            chunks.push(next.map(|s| s.unwrap()));
        }
        let run = |(ci, parts): (usize, [&mut [Complex64]; C])| {
            for j in 0..parts[0].len() {
                let v = f(ci * chunk + j, std::array::from_fn(|c| parts[c][j]));
                for (c, z) in v.into_iter().enumerate() {
                    parts[c][j] = z;
                }
            }
        };
        if chunks.len() > 1 {
            chunks.into_par_iter().enumerate().for_each(run);
        } else {
            chunks.into_iter().enumerate().for_each(run);
        }
    }

    /// `sum_points sum_c |psi_c|^2 * cell volume`.
    pub fn norm_sq(&self) -> f64 {
        let dv = self.grid.cell_volume();
        pairwise_sum(0, self.grid.len(), &|i| {
            self.comps.iter().map(|c| c[i].norm_sqr()).sum::<f64>()
        }) * dv
    }
}

/// `sum_points f^dagger M g * cell volume`.
pub fn inner_product<const C: usize>(f: &Field<C>, g: &Field<C>, metric: Metric) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let weights: [f64; C] = match metric {
        Metric::Identity => [1.0; C],
        Metric::Sigma3 => {
            if C != 2 {
                return Err(Error::InvalidMetric);
            }
            std::array::from_fn(|c| if c == 0 { 1.0 } else { -1.0 })
        }
    };
    let dv = f.grid.cell_volume();
    let sum = pairwise_sum_complex(0, f.grid.len(), &|i| {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..C {
            acc += f.comps[c][i].conj() * g.comps[c][i] * weights[c];
        }
        acc
    });
    Ok(sum * dv)
}

const PAIRWISE_BLOCK: usize = 128;

/// Pairwise (cascade) summation of `term(i)` over `lo..hi`. The reduction
/// tree depends only on the range, so results are reproducible.
pub fn pairwise_sum(lo: usize, hi: usize, term: &dyn Fn(usize) -> f64) -> f64 {
    if hi - lo <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for i in lo..hi {
            s += term(i);
        }
        s
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term)
    }
}

pub fn pairwise_sum_complex(lo: usize, hi: usize, term: &dyn Fn(usize) -> Complex64) -> Complex64 {
    if hi - lo <= PAIRWISE_BLOCK {
        let mut s = Complex64::new(0.0, 0.0);
        for i in lo..hi {
            s += term(i);
        }
        s
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum_complex(lo, mid, term) + pairwise_sum_complex(mid, hi, term)
    }
}
