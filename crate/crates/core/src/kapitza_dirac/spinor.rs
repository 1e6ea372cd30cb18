//! Free Dirac plane-wave spinors in the Dirac representation.

use num_complex::Complex64;

use crate::algebra::{alpha_dot_apply, EnergySign, Spin, Spinor};
use crate::units::PhysicalConstants;
use crate::vec3::{dot, Vec3};

/// Mode order used throughout: `up+`, `down+`, `up-`, `down-`.
pub const MODES: [(Spin, EnergySign); 4] = [
    (Spin::Up, EnergySign::Positive),
    (Spin::Down, EnergySign::Positive),
    (Spin::Up, EnergySign::Negative),
    (Spin::Down, EnergySign::Negative),
];

/// Short label of a mode index, e.g. `up+`.
pub fn mode_label(gamma: usize) -> &'static str {
    ["up+", "down+", "up-", "down-"][gamma]
}

/// Simultaneous eigenstate of the free Hamiltonian with momentum `p`,
/// energy `energy_sign * E(p)` and rest-frame spin `spin` along `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveSpinor {
    pub p: Vec3,
    pub spin: Spin,
    pub energy_sign: EnergySign,
    pub u: Spinor,
}

/// Positive energy: `N (chi, c sigma.p chi / (E + mc^2))`; negative energy:
/// `N (-c sigma.p chi / (E + mc^2), chi)`, with `N = sqrt((E + mc^2) / 2E)`.
pub fn plane_wave_spinor(p: Vec3, spin: Spin, energy_sign: EnergySign, consts: &PhysicalConstants) -> PlaneWaveSpinor {
    let mc2 = consts.rest_energy();
    let e = consts.energy_from_p2(dot(p, p));
    let norm = ((e + mc2) / (2.0 * e)).sqrt();
    let f = consts.c / (e + mc2);
    let chi = match spin {
        Spin::Up => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        Spin::Down => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    };
    let zero = Complex64::new(0.0, 0.0);
    // alpha.p acting on (0, chi) gives (sigma.p chi, 0) and on (chi, 0) gives (0, sigma.p chi)
    let u = match energy_sign {
        EnergySign::Positive => {
            let s = alpha_dot_apply(p, [chi[0], chi[1], zero, zero]);
            [chi[0], chi[1], s[2] * f, s[3] * f]
        }
        EnergySign::Negative => {
            let s = alpha_dot_apply(p, [zero, zero, chi[0], chi[1]]);
            [-s[0] * f, -s[1] * f, chi[0], chi[1]]
        }
    };
    PlaneWaveSpinor {
        p,
        spin,
        energy_sign,
        u: Spinor::from_iterator(u.into_iter().map(|z| z * norm)),
    }
}

/// The four spinors at momentum `p` in [`MODES`] order.
pub fn spinor_quartet(p: Vec3, consts: &PhysicalConstants) -> [PlaneWaveSpinor; 4] {
    MODES.map(|(s, e)| plane_wave_spinor(p, s, e, consts))
}

/// `u_left^dagger (E . alpha) u_right`.
pub fn coupling_element(left: &PlaneWaveSpinor, right: &PlaneWaveSpinor, e: Vec3) -> Complex64 {
    let r: [Complex64; 4] = std::array::from_fn(|i| right.u[i]);
    let ar = alpha_dot_apply(e, r);
    (0..4).map(|i| left.u[i].conj() * ar[i]).sum()
}
