//! Block-Thomas factorization of block-tridiagonal systems with 4x4 blocks.

use num_complex::Complex64;

use crate::algebra::{Mat4, Spinor};
use crate::{Error, Result};

/// LU factors of
/// `A = tridiag(lower[i-1], diag[i], upper[i])`, reusable for many
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct BlockTridiagonalLu {
    /// `S_i^{-1}`, inverse Schur complements.
    s_inv: Vec<Mat4>,
    /// `G_i = S_i^{-1} upper[i]`.
    g: Vec<Mat4>,
    lower: Vec<Mat4>,
}

impl BlockTridiagonalLu {
    /// Factors without pivoting between blocks, which is safe whenever the
    /// Hermitian part of `A` is positive definite (true for Crank-Nicolson
    /// matrices `I + i a M` with Hermitian `M`).
    pub fn factor(diag: &[Mat4], upper: &[Mat4], lower: &[Mat4]) -> Result<Self> {
        let n = diag.len();
        assert!(n >= 1 && upper.len() + 1 == n && lower.len() + 1 == n);
        let mut s_inv = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n - 1);
        for i in 0..n {
            let s = if i == 0 { diag[0] } else { diag[i] - lower[i - 1] * g[i - 1] };
            let inv = s.try_inverse().ok_or(Error::SingularSystem(i))?;
            if !inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::SingularSystem(i));
            }
            if i + 1 < n {
                g.push(inv * upper[i]);
            }
            s_inv.push(inv);
        }
        Ok(Self {
            s_inv,
            g,
            lower: lower.to_vec(),
        })
    }

    pub fn blocks(&self) -> usize {
        self.s_inv.len()
    }

    /// Overwrites `rhs` (length `4 * blocks`) with the solution.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = self.s_inv.len();
        assert_eq!(rhs.len(), 4 * n);
        let get = |v: &[Complex64], i: usize| Spinor::from_column_slice(&v[4 * i..4 * i + 4]);
        let mut prev = Spinor::zeros();
        for i in 0..n {
            let mut r = get(rhs, i);
            if i > 0 {
                r -= self.lower[i - 1] * prev;
            }
            prev = self.s_inv[i] * r;
            rhs[4 * i..4 * i + 4].copy_from_slice(prev.as_slice());
        }
        let mut next = get(rhs, n - 1);
        for i in (0..n - 1).rev() {
            let x = get(rhs, i) - self.g[i] * next;
            rhs[4 * i..4 * i + 4].copy_from_slice(x.as_slice());
            next = x;
        }
    }
}
