//! Physical constants and conversions between atomic and laboratory units.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hartree energy in electron volts.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Atomic unit of time in attoseconds.
pub const ATOMIC_TIME_AS: f64 = 24.188_843_265_857;
/// Atomic unit of electric field strength in V/m.
pub const ATOMIC_FIELD_V_PER_M: f64 = 5.142_206_747_63e11;
/// Intensity of a linearly polarized wave whose peak field is one atomic
/// unit, in W/cm^2.
pub const ATOMIC_INTENSITY_W_CM2: f64 = 3.509_444_758e16;
/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT_AU: f64 = 137.035_999;

/// Units of the simulation. Defaults are Hartree atomic units for an
/// electron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub charge: f64,
    pub c: f64,
    /// Characteristic atomic field strength `E_a`.
    pub field_unit: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::atomic()
    }
}

impl PhysicalConstants {
    pub const fn atomic() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            charge: -1.0,
            c: SPEED_OF_LIGHT_AU,
            field_unit: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("c", self.c),
            ("field_unit", self.field_unit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.charge.is_finite() || self.charge == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "charge must be finite and nonzero, got {}",
                self.charge
            )));
        }
        Ok(())
    }

    /// Rest energy `m c^2`.
    pub fn rest_energy(&self) -> f64 {
        self.mass * self.c * self.c
    }

    /// Relativistic dispersion `sqrt(m^2 c^4 + c^2 p^2)` for `|p|^2 = p2`.
    pub fn energy_from_p2(&self, p2: f64) -> f64 {
        let mc2 = self.rest_energy();
        (mc2 * mc2 + self.c * self.c * p2).sqrt()
    }

    /// Elementary charge magnitude `e = |q|`.
    pub fn elementary_charge(&self) -> f64 {
        self.charge.abs()
    }

    /// Compton wavelength `2 pi hbar / (m c)`.
    pub fn compton_wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar / (self.mass * self.c)
    }

    /// Momentum given as `p c` in keV converted to atomic units.
    pub fn momentum_from_kev(&self, pc_kev: f64) -> f64 {
        kev_to_hartree(pc_kev) / self.c
    }

    pub fn momentum_to_kev(&self, p: f64) -> f64 {
        hartree_to_kev(p * self.c)
    }

    /// Angular frequency of a photon with the given energy in eV.
    pub fn omega_from_photon_ev(&self, ev: f64) -> f64 {
        ev_to_hartree(ev) / self.hbar
    }
}

pub fn ev_to_hartree(ev: f64) -> f64 {
    ev / HARTREE_EV
}

pub fn hartree_to_ev(e: f64) -> f64 {
    e * HARTREE_EV
}

pub fn kev_to_hartree(kev: f64) -> f64 {
    kev * 1.0e3 / HARTREE_EV
}

pub fn hartree_to_kev(e: f64) -> f64 {
    e * HARTREE_EV * 1.0e-3
}

pub fn attoseconds_to_au(t_as: f64) -> f64 {
    t_as / ATOMIC_TIME_AS
}

pub fn au_to_attoseconds(t: f64) -> f64 {
    t * ATOMIC_TIME_AS
}

/// Peak field (atomic units) of a linearly polarized wave of the given
/// cycle-averaged intensity.
pub fn field_from_intensity(w_per_cm2: f64) -> f64 {
    (w_per_cm2 / ATOMIC_INTENSITY_W_CM2).sqrt()
}

pub fn field_to_v_per_m(e: f64) -> f64 {
    e * ATOMIC_FIELD_V_PER_M
}
