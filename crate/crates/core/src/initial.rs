//! Analytic initial states for the grid propagators.
//!
//! Packets are built in momentum space from free eigenspinors, so a packet on
//! one energy branch stays on it under free evolution. A packet centered on a
//! binding potential is the surrogate used for bound initial states; no
//! ground-state solver is provided.

use num_complex::Complex64;

use crate::algebra::{EnergySign, Spin};
use crate::error::{Error, Result};
use crate::field::{PairField, SpinorField};
use crate::grid::Grid;
use crate::kapitza_dirac::plane_wave_spinor;
use crate::kg::{discrete_energy, kg_charge, StencilOrder};
use crate::spectral::{Direction, SpectralPlan};
use crate::units::PhysicalConstants;
use crate::vec3::{dot, scale, sub, Vec3};

/// Gaussian envelope `exp(-|r - center|^2 / (2 width^2))` carrying mean
/// momentum `momentum`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacket {
    pub center: Vec3,
    pub width: f64,
    pub momentum: Vec3,
}

impl WavePacket {
    fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidParameter(format!("packet width must be positive, got {}", self.width)));
        }
        if self.width > 0.25 * grid.extent() {
            log::warn!("packet width {} is large against the box {}", self.width, grid.extent());
        }
        Ok(())
    }

    /// Momentum-space weight at wave vector `k`, including the phase that
    /// shifts the packet to `center` on a grid starting at `-L/2`.
    fn weight(&self, grid: &Grid, k: Vec3, hbar: f64) -> Complex64 {
        let dk = sub(k, scale(self.momentum, 1.0 / hbar));
        let amp = (-0.5 * dot(dk, dk) * self.width * self.width).exp();
        let origin = if grid.dim() == 1 {
            [-0.5 * grid.extent(), 0.0, 0.0]
        } else {
            [-0.5 * grid.extent(), 0.0, -0.5 * grid.extent()]
        };
        Complex64::from_polar(amp, -dot(k, sub(self.center, origin)))
    }
}

/// Unit-norm Dirac packet on one energy branch with rest-frame spin `spin`.
pub fn dirac_packet(
    grid: &Grid,
    packet: &WavePacket,
    spin: Spin,
    sign: EnergySign,
    consts: &PhysicalConstants,
) -> Result<SpinorField> {
    packet.validate(grid)?;
    let mut psi = SpinorField::try_zeros(*grid)?;
    for i in 0..grid.len() {
        let k = grid.wavevector(i);
        let w = packet.weight(grid, k, consts.hbar);
        let u = plane_wave_spinor(scale(k, consts.hbar), spin, sign, consts).u;
        psi.set(i, std::array::from_fn(|c| u[c] * w));
    }
    SpectralPlan::new(grid).transform(&mut psi, Direction::Inverse);
    let norm = psi.norm_sq().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("packet has no weight on the grid".into()));
    }
    psi.scale(Complex64::new(1.0 / norm, 0.0));
    Ok(psi)
}

/// Feshbach-Villars packet on one energy branch built from eigenvectors of
/// the discretized free Hamiltonian, scaled to charge `+1` or `-1`.
pub fn kg_packet(
    grid: &Grid,
    packet: &WavePacket,
    sign: EnergySign,
    order: StencilOrder,
    consts: &PhysicalConstants,
) -> Result<PairField> {
    packet.validate(grid)?;
    let s = sign.signum();
    let mut psi = PairField::try_zeros(*grid)?;
    for i in 0..grid.len() {
        let k = grid.wavevector(i);
        let eps = discrete_energy(grid, k, order, consts) / consts.rest_energy();
        // each mode then carries charge s |w|^2
        let w = packet.weight(grid, k, consts.hbar) / eps.sqrt();
        psi.set(i, [w * 0.5 * (1.0 + s * eps), w * 0.5 * (1.0 - s * eps)]);
    }
    SpectralPlan::new(grid).transform(&mut psi, Direction::Inverse);
    let q = kg_charge(&psi);
    if !(q.abs() > 0.0) {
        return Err(Error::InvalidParameter("packet has no charge on the grid".into()));
    }
    psi.scale(Complex64::new(1.0 / q.abs().sqrt(), 0.0));
    Ok(psi)
}
