//! Momentum ladder, standing-wave drive and the coupled-mode matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::spinor::{coupling_element, spinor_quartet, PlaneWaveSpinor};
use crate::algebra::Mat4;
use crate::potentials::Envelope;
use crate::units::{PhysicalConstants, ATOMIC_INTENSITY_W_CM2};
use crate::vec3::{add, dot, norm, scale, Vec3};
use crate::{Error, Result};

/// Ladder of momenta `p + n hbar k` for `n_min <= n <= n_max`, four modes each.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    p: Vec3,
    k: Vec3,
    n_min: i32,
    n_max: i32,
    consts: PhysicalConstants,
    spinors: Vec<[PlaneWaveSpinor; 4]>,
    energies: Vec<f64>,
}

impl ModeBasis {
    pub fn new(p: Vec3, k: Vec3, n_min: i32, n_max: i32, consts: PhysicalConstants) -> Result<Self> {
        if n_min > 0 || n_max < 0 || n_max - n_min < 1 {
            return Err(Error::InvalidParameter(format!(
                "ladder [{n_min}, {n_max}] must contain 0 and at least two sites"
            )));
        }
        if !(norm(k) > 0.0) {
            return Err(Error::InvalidParameter("standing-wave vector must be nonzero".into()));
        }
        consts.validate()?;
        let mut spinors = Vec::new();
        let mut energies = Vec::new();
        for n in n_min..=n_max {
            let pn = add(p, scale(k, n as f64 * consts.hbar));
            spinors.push(spinor_quartet(pn, &consts));
            energies.push(consts.energy_from_p2(dot(pn, pn)));
        }
        Ok(Self {
            p,
            k,
            n_min,
            n_max,
            consts,
            spinors,
            energies,
        })
    }

    /// Same momenta with `extra` more sites on each side.
    pub fn extended(&self, extra: i32) -> Result<Self> {
        Self::new(self.p, self.k, self.n_min - extra, self.n_max + extra, self.consts)
    }

    pub fn p(&self) -> Vec3 {
        self.p
    }

    pub fn k(&self) -> Vec3 {
        self.k
    }

    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    pub fn consts(&self) -> &PhysicalConstants {
        &self.consts
    }

    /// Number of ladder sites.
    pub fn sites(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    /// Number of coefficients, `4 * sites`.
    pub fn dim(&self) -> usize {
        4 * self.sites()
    }

    pub fn site(&self, n: i32) -> Option<usize> {
        (self.n_min..=self.n_max).contains(&n).then(|| (n - self.n_min) as usize)
    }

    pub fn n_of(&self, site: usize) -> i32 {
        self.n_min + site as i32
    }

    /// Flat coefficient index of `(n, gamma)`.
    pub fn index(&self, n: i32, gamma: usize) -> Option<usize> {
        self.site(n).map(|s| 4 * s + gamma)
    }

    pub fn momentum(&self, n: i32) -> Vec3 {
        add(self.p, scale(self.k, n as f64 * self.consts.hbar))
    }

    /// `E(p + n hbar k)` by site.
    pub fn energy_at_site(&self, site: usize) -> f64 {
        self.energies[site]
    }

    pub fn spinors_at_site(&self, site: usize) -> &[PlaneWaveSpinor; 4] {
        &self.spinors[site]
    }
}

/// Standing wave `A = -(E/(c|k|)) cos(k.r) sin(c|k|t) w(t)` seen by the mode
/// expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct KdLaser {
    pub e: Vec3,
    pub k: Vec3,
    pub envelope: Envelope,
}

impl KdLaser {
    pub fn new(e: Vec3, k: Vec3, envelope: Envelope) -> Result<Self> {
        if !(norm(k) > 0.0) {
            return Err(Error::InvalidParameter("laser wave vector must be nonzero".into()));
        }
        if dot(e, k).abs() > 1e-12 * norm(e) * norm(k) {
            return Err(Error::InvalidParameter("standing-wave field must be transverse to k".into()));
        }
        envelope.validate()?;
        Ok(Self { e, k, envelope })
    }

    /// Laser from photon energy and per-beam peak intensity of two
    /// counterpropagating beams. Each beam has peak field
    /// `sqrt(I / (2 I_au))`; the standing wave they form has amplitude twice
    /// that, `sqrt(2 I / I_au)`. The envelope period is set to `T_L`.
    pub fn from_beams(
        photon_ev: f64,
        intensity_w_cm2: f64,
        polarization: Vec3,
        direction: Vec3,
        ramp_cycles: f64,
        flat_cycles: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        if !(photon_ev > 0.0 && intensity_w_cm2 >= 0.0) {
            return Err(Error::InvalidParameter("photon energy must be positive and intensity nonnegative".into()));
        }
        let omega = consts.omega_from_photon_ev(photon_ev);
        let kmag = omega / consts.c;
        let e0 = standing_wave_amplitude(intensity_w_cm2) * consts.field_unit;
        let pol = scale(polarization, 1.0 / norm(polarization));
        let dir = scale(direction, 1.0 / norm(direction));
        let period = 2.0 * PI / omega;
        Self::new(
            scale(pol, e0),
            scale(dir, kmag),
            Envelope::new(ramp_cycles, flat_cycles, period)?,
        )
    }

    /// `T_L = 2 pi / (c |k|)`.
    pub fn period(&self, consts: &PhysicalConstants) -> f64 {
        2.0 * PI / (consts.c * norm(self.k))
    }

    pub fn total_time(&self) -> f64 {
        self.envelope.duration()
    }

    /// Scalar drive `q w(t) sin(c|k|t) / (2|k|)` multiplying the coupling
    /// blocks.
    pub fn drive(&self, t: f64, consts: &PhysicalConstants) -> f64 {
        let kn = norm(self.k);
        consts.charge * self.envelope.value(t) * (consts.c * kn * t).sin() / (2.0 * kn)
    }
}

/// Standing-wave amplitude in atomic units for two beams of the given peak
/// intensity each.
pub fn standing_wave_amplitude(intensity_w_cm2: f64) -> f64 {
    (2.0 * intensity_w_cm2 / ATOMIC_INTENSITY_W_CM2).sqrt()
}

/// Hermitian block-tridiagonal coupled-mode matrix with 4x4 blocks. The
/// block below the diagonal at site `i + 1` is `upper[i]^dagger`.
#[derive(Debug, Clone)]
pub struct ModeMatrix {
    /// Diagonal entries, one per coefficient.
    pub diagonal: Vec<f64>,
    /// Coupling from site `i` to site `i + 1`.
    pub upper: Vec<Mat4>,
}

impl ModeMatrix {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (i, &v) in self.diagonal.iter().enumerate() {
            m[(i, i)] = Complex64::from(v);
        }
        for (s, b) in self.upper.iter().enumerate() {
            for r in 0..4 {
                for c in 0..4 {
                    m[(4 * s + r, 4 * s + 4 + c)] = b[(r, c)];
                    m[(4 * s + 4 + c, 4 * s + r)] = b[(r, c)].conj();
                }
            }
        }
        m
    }

    /// `out = M x`.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (o, (xi, d)) in out.iter_mut().zip(x.iter().zip(&self.diagonal)) {
            *o = xi * d;
        }
        for (s, b) in self.upper.iter().enumerate() {
            let (lo, hi) = (4 * s, 4 * s + 4);
            for r in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut back = Complex64::new(0.0, 0.0);
                for c in 0..4 {
                    acc += b[(r, c)] * x[hi + c];
                    back += b[(c, r)].conj() * x[lo + c];
                }
                out[lo + r] += acc;
                out[hi + r] += back;
            }
        }
    }
}

/// Constant coupling blocks `<u_i^gamma| E.alpha |u_{i+1}^delta>`.
pub fn coupling_blocks(basis: &ModeBasis, e: Vec3) -> Vec<Mat4> {
    (0..basis.sites() - 1)
        .map(|s| {
            let (a, b) = (basis.spinors_at_site(s), basis.spinors_at_site(s + 1));
            Mat4::from_fn(|r, c| coupling_element(&a[r], &b[c], e))
        })
        .collect()
}

/// Diagonal `eps^gamma E(p + n hbar k) - frame_energy`.
pub fn diagonal_energies(basis: &ModeBasis, frame_energy: f64) -> Vec<f64> {
    (0..basis.sites())
        .flat_map(|s| {
            let e = basis.energy_at_site(s);
            [e - frame_energy, e - frame_energy, -e - frame_energy, -e - frame_energy]
        })
        .collect()
}

/// `M(t)`: diagonal energies plus the drive times the coupling blocks.
pub fn assemble_system(basis: &ModeBasis, laser: &KdLaser, t: f64) -> ModeMatrix {
    assemble_in_frame(basis, laser, t, 0.0)
}

/// `M(t)` with `frame_energy` subtracted from the diagonal.
pub fn assemble_in_frame(basis: &ModeBasis, laser: &KdLaser, t: f64, frame_energy: f64) -> ModeMatrix {
    let s = Complex64::from(laser.drive(t, basis.consts()));
    ModeMatrix {
        diagonal: diagonal_energies(basis, frame_energy),
        upper: coupling_blocks(basis, laser.e).into_iter().map(|b| b * s).collect(),
    }
}
