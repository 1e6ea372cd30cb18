//! Pauli and Dirac matrices and the free Dirac Hamiltonian.
//!
//! The Dirac matrices use the Dirac representation: `alpha_i` carries
//! `sigma_i` on its off-diagonal 2x2 blocks and `beta = diag(1, 1, -1, -1)`.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::PhysicalConstants;
use crate::vec3::Vec3;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;
pub type Spinor = Vector4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sign of the free-particle energy branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergySign {
    Positive,
    Negative,
}

impl EnergySign {
    pub fn signum(self) -> f64 {
        match self {
            EnergySign::Positive => 1.0,
            EnergySign::Negative => -1.0,
        }
    }
}

/// Rest-frame spin projection on the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

/// `sigma_0` (identity) and the three Pauli matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSet {
    pub sigma: [Mat2; 4],
}

impl PauliSet {
    pub fn standard() -> Self {
        Self {
            sigma: [
                Mat2::new(ONE, ZERO, ZERO, ONE),
                Mat2::new(ZERO, ONE, ONE, ZERO),
                Mat2::new(ZERO, -I, I, ZERO),
                Mat2::new(ONE, ZERO, ZERO, -ONE),
            ],
        }
    }
}

impl Default for PauliSet {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracSet {
    pub alpha: [Mat4; 3],
    pub beta: Mat4,
}

impl DiracSet {
    pub fn dirac_representation() -> Self {
        let pauli = PauliSet::standard();
        let off_diagonal = |s: &Mat2| {
            let mut m = Mat4::zeros();
            m.fixed_view_mut::<2, 2>(0, 2).copy_from(s);
            m.fixed_view_mut::<2, 2>(2, 0).copy_from(s);
            m
        };
        let mut beta = Mat4::zeros();
        beta.fixed_view_mut::<2, 2>(0, 0).copy_from(&pauli.sigma[0]);
        beta.fixed_view_mut::<2, 2>(2, 2).copy_from(&(-pauli.sigma[0]));
        Self {
            alpha: [
                off_diagonal(&pauli.sigma[1]),
                off_diagonal(&pauli.sigma[2]),
                off_diagonal(&pauli.sigma[3]),
            ],
            beta,
        }
    }

    /// `v . alpha`
    pub fn alpha_dot(&self, v: Vec3) -> Mat4 {
        self.alpha[0] * Complex64::from(v[0])
            + self.alpha[1] * Complex64::from(v[1])
            + self.alpha[2] * Complex64::from(v[2])
    }

    /// Momentum-space free Hamiltonian `c alpha.p + m c^2 beta`.
    pub fn free_hamiltonian(&self, p: Vec3, consts: &PhysicalConstants) -> Mat4 {
        self.alpha_dot(p) * Complex64::from(consts.c)
            + self.beta * Complex64::from(consts.rest_energy())
    }
}

impl Default for DiracSet {
    fn default() -> Self {
        Self::dirac_representation()
    }
}

/// `(sigma . v) (a, b)` for a two-spinor, written out component-wise.
#[inline]
pub(crate) fn sigma_dot_apply(v: Vec3, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let (vx, vy, vz) = (v[0], v[1], v[2]);
    (
        a * vz + b * Complex64::new(vx, -vy),
        a * Complex64::new(vx, vy) - b * vz,
    )
}

/// `(alpha . v) psi` without forming the 4x4 matrix.
#[inline]
pub(crate) fn alpha_dot_apply(v: Vec3, psi: [Complex64; 4]) -> [Complex64; 4] {
    let (u0, u1) = sigma_dot_apply(v, psi[2], psi[3]);
    let (l0, l1) = sigma_dot_apply(v, psi[0], psi[1]);
    [u0, u1, l0, l1]
}

/// `(c alpha.p + m c^2 beta) psi` without forming the 4x4 matrix.
#[inline]
pub(crate) fn free_hamiltonian_apply(
    p: Vec3,
    psi: [Complex64; 4],
    consts: &PhysicalConstants,
) -> [Complex64; 4] {
    let a = alpha_dot_apply(p, psi);
    let mc2 = consts.rest_energy();
    let c = consts.c;
    [
        a[0] * c + psi[0] * mc2,
        a[1] * c + psi[1] * mc2,
        a[2] * c - psi[2] * mc2,
        a[3] * c - psi[3] * mc2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_zero(m: &Mat4) -> bool {
        m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    #[test]
    fn pauli_identities() {
        let s = PauliSet::standard().sigma;
        for i in 1..4 {
            assert_eq!(s[i] * s[i], s[0]);
        }
        assert_eq!(s[1] * s[2], s[3] * I);
        assert_eq!(s[2] * s[3], s[1] * I);
        assert_eq!(s[3] * s[1], s[2] * I);
        let n = s[3] + s[2] * I;
        assert_eq!(n * n, Mat2::zeros());
    }

    #[test]
    fn dirac_algebra_is_exact() {
        let d = DiracSet::dirac_representation();
        let id = Mat4::identity();
        for i in 0..3 {
            for k in 0..3 {
                let anti = d.alpha[i] * d.alpha[k] + d.alpha[k] * d.alpha[i];
                let expect = if i == k { id * Complex64::from(2.0) } else { Mat4::zeros() };
                assert!(exact_zero(&(anti - expect)));
            }
            assert!(exact_zero(&(d.alpha[i] * d.beta + d.beta * d.alpha[i])));
        }
        assert_eq!(d.beta * d.beta, id);
    }

    #[test]
    fn component_forms_match_matrices() {
        let d = DiracSet::dirac_representation();
        let k = PhysicalConstants::atomic();
        let p = [0.3, -1.7, 2.2];
        let psi = [
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.5, 0.3),
            Complex64::new(0.7, -0.1),
            Complex64::new(0.0, 1.0),
        ];
        let v = Spinor::from_column_slice(&psi);
        let via_matrix = d.free_hamiltonian(p, &k) * v;
        let via_components = free_hamiltonian_apply(p, psi, &k);
        for i in 0..4 {
            assert!((via_matrix[i] - via_components[i]).norm() < 1e-9);
        }
        let a = d.alpha_dot(p) * v;
        let b = alpha_dot_apply(p, psi);
        for i in 0..4 {
            assert!((a[i] - b[i]).norm() < 1e-14);
        }
    }
}
