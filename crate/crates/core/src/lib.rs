//! Relativistic quantum dynamics kernels.
//!
//! The crate bundles four solvers that share one set of units, matrices and
//! grids:
//!
//! * [`dirac`]: Fourier split-operator propagation of the time-dependent
//!   Dirac equation on periodic 1-D/2-D grids.
//! * [`kg`]: real-space split-operator propagation of the two-component
//!   (Feshbach-Villars) Klein-Gordon equation.
//! * [`kapitza_dirac`]: plane-wave mode expansion of the Dirac equation in a
//!   standing light wave, propagated with a block-tridiagonal Crank-Nicolson
//!   scheme, plus Bragg-condition and Rabi-period analysis.
//! * [`wkb`]: quasi-classical relativistic tunneling exponents with
//!   position-dependent energy levels.
//!
//! [`config`] and [`scenario`] drive the solvers from TOML scenario files and
//! [`bench`] measures propagation throughput.
//!
//! All quantities are in Hartree atomic units unless a helper in [`units`]
//! says otherwise.

pub mod algebra;
pub mod bench;
pub mod config;
pub mod dirac;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod kapitza_dirac;
pub mod kg;
pub mod mask;
pub mod optimize;
#[cfg(test)]
mod oracle;
pub mod potentials;
pub mod quadrature;
pub mod scenario;
pub mod snapshot;
pub mod spectral;
pub mod units;
pub mod vec3;
pub mod wkb;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
