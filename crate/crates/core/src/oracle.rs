//! Brute-force reference computations used by unit tests.

use nalgebra::SMatrix;
use num_complex::Complex64;

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm<const N: usize>(a: &SMatrix<Complex64, N, N>) -> SMatrix<Complex64, N, N> {
    let norm1 = (0..N)
        .map(|j| (0..N).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let b = a * Complex64::from(scale);
    let mut term = SMatrix::<Complex64, N, N>::identity();
    let mut sum = term;
    for k in 1..=30 {
        term = term * b / Complex64::from(k as f64);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

pub fn expm4(a: &SMatrix<Complex64, 4, 4>) -> SMatrix<Complex64, 4, 4> {
    expm(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator() {
        let t = 2.7;
        let a = SMatrix::<Complex64, 2, 2>::new(0.0.into(), (-t).into(), t.into(), 0.0.into());
        let e = expm(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-14);
    }
}
