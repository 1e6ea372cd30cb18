//! Kapitza-Dirac scattering in a standing light wave.
//!
//! The electron wave function is expanded in free plane-wave spinors on the
//! momentum ladder `p + n hbar k`. The standing wave couples neighbouring
//! ladder sites only, giving a Hermitian block-tridiagonal system that is
//! integrated with Crank-Nicolson steps and a block-Thomas solve.

mod bragg;
mod evolve;
mod rabi;
mod solver;
mod spinor;
mod system;

pub use bragg::{bragg_angle, bragg_momentum, bragg_residual, BraggSolution};
pub use evolve::{
    cn_step, edge_population, occupations, propagate_modes, CnStepper, ModeState, Occupations, PropagateOptions,
    with_cutoff_extension, CUTOFF_TOLERANCE,
};
pub use rabi::{
    floquet_resonance, rabi_period, rabi_scan, tune_resonance, FloquetResonance, RabiScan, ScanOptions, ScanPoint,
    TuneOptions, TuneResult,
};
pub use solver::BlockTridiagonalLu;
pub use spinor::{coupling_element, mode_label, plane_wave_spinor, spinor_quartet, PlaneWaveSpinor, MODES};
pub use system::{
    assemble_in_frame, assemble_system, coupling_blocks, diagonal_energies, standing_wave_amplitude, KdLaser,
    ModeBasis, ModeMatrix,
};
