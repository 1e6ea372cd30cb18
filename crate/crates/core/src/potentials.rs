//! Analytic electromagnetic potentials `(phi, A)` and the fields derived from
//! them, `E = -grad phi - dA/dt` and `B = curl A`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::vec3::{add, cross, dot, norm, scale, Vec3};
use crate::{Error, Result};

/// Temporal envelope: `sin^2` ramp-up, flat top, symmetric `sin^2`
/// ramp-down, zero outside `[0, T]`. Lengths are in units of `period`.
///
/// With `ramp_cycles = 0` the envelope switches on and off abruptly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub ramp_cycles: f64,
    pub flat_cycles: f64,
    pub period: f64,
}

impl Envelope {
    pub fn new(ramp_cycles: f64, flat_cycles: f64, period: f64) -> Result<Self> {
        let e = Self {
            ramp_cycles,
            flat_cycles,
            period,
        };
        e.validate()?;
        Ok(e)
    }

    /// Constant 1 for all `t >= 0`.
    pub fn unlimited() -> Self {
        Self {
            ramp_cycles: 0.0,
            flat_cycles: f64::INFINITY,
            period: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "envelope period must be positive, got {}",
                self.period
            )));
        }
        if !(self.ramp_cycles >= 0.0 && self.ramp_cycles.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ramp_cycles must be finite and nonnegative, got {}",
                self.ramp_cycles
            )));
        }
        if !(self.flat_cycles >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "flat_cycles must be nonnegative, got {}",
                self.flat_cycles
            )));
        }
        Ok(())
    }

    pub fn ramp_time(&self) -> f64 {
        self.ramp_cycles * self.period
    }

    pub fn flat_time(&self) -> f64 {
        self.flat_cycles * self.period
    }

    /// Total interaction time `T`.
    pub fn duration(&self) -> f64 {
        2.0 * self.ramp_time() + self.flat_time()
    }

    pub fn value(&self, t: f64) -> f64 {
        let r = self.ramp_time();
        let total = self.duration();
        if t < 0.0 || t > total {
            return 0.0;
        }
        if r == 0.0 {
            return 1.0;
        }
        if t < r {
            (0.5 * PI * t / r).sin().powi(2)
        } else if t <= r + self.flat_time() {
            1.0
        } else {
            (0.5 * PI * (total - t) / r).sin().powi(2)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let r = self.ramp_time();
        let total = self.duration();
        if r == 0.0 || t <= 0.0 || t >= total {
            return 0.0;
        }
        if t < r {
            0.5 * PI / r * (PI * t / r).sin()
        } else if t <= r + self.flat_time() {
            0.0
        } else {
            -0.5 * PI / r * (PI * (total - t) / r).sin()
        }
    }
}

/// Linearly polarized field profile `E(eta) = e0 w(eta) cos(omega eta + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserProfile {
    pub e0: Vec3,
    pub omega: f64,
    pub phase: f64,
    pub envelope: Option<Envelope>,
}

impl LaserProfile {
    fn eval(&self, eta: f64) -> (Vec3, Vec3) {
        let (w, dw) = match &self.envelope {
            Some(env) => (env.value(eta), env.derivative(eta)),
            None => (1.0, 0.0),
        };
        let arg = self.omega * eta + self.phase;
        let (s, c) = arg.sin_cos();
        (
            scale(self.e0, w * c),
            scale(self.e0, dw * c - self.omega * w * s),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialSpec {
    /// `A = -(e0 / (c|k|)) cos(k.r) sin(c|k|t) w(t)`, `phi = 0`.
    StandingWave { e0: Vec3, k: Vec3, envelope: Envelope },
    /// Electric-field gauge: `phi = -r.E(eta)`, `A = -k_hat (r.E(eta)) / c`
    /// with `eta = t - k_hat.r / c`.
    EfGaugeLaser { profile: LaserProfile, k_hat: Vec3 },
    /// `phi = -z / sqrt(r^2 + a^2)`.
    SoftCore { z: f64, a: f64 },
    /// `phi = -r.e0`.
    StaticUniform { e0: Vec3 },
    Sum(Vec<PotentialSpec>),
}

/// Scalar and vector potential at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Potentials {
    pub phi: f64,
    pub a: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmFields {
    pub e: Vec3,
    pub b: Vec3,
}

impl PotentialSpec {
    pub fn vacuum() -> Self {
        PotentialSpec::Sum(Vec::new())
    }

    pub fn is_vacuum(&self) -> bool {
        match self {
            PotentialSpec::Sum(parts) => parts.iter().all(|p| p.is_vacuum()),
            _ => false,
        }
    }

    /// Whether any term carries a vector potential.
    pub fn has_vector_potential(&self) -> bool {
        match self {
            PotentialSpec::StandingWave { .. } | PotentialSpec::EfGaugeLaser { .. } => true,
            PotentialSpec::SoftCore { .. } | PotentialSpec::StaticUniform { .. } => false,
            PotentialSpec::Sum(parts) => parts.iter().any(|p| p.has_vector_potential()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::StandingWave { k, envelope, e0 } => {
                if !(norm(*k) > 0.0) {
                    return Err(Error::InvalidParameter("standing wave needs |k| > 0".into()));
                }
                if dot(*k, *e0).abs() > 1e-12 * norm(*k) * norm(*e0) {
                    log::warn!("standing-wave field is not transverse to k");
                }
                envelope.validate()
            }
            PotentialSpec::EfGaugeLaser { profile, k_hat } => {
                if (norm(*k_hat) - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "k_hat must be a unit vector, |k_hat| = {}",
                        norm(*k_hat)
                    )));
                }
                if let Some(env) = &profile.envelope {
                    env.validate()?;
                }
                Ok(())
            }
            PotentialSpec::SoftCore { a, .. } => {
                if !(*a > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "soft-core length must be positive, got {a}"
                    )));
                }
                Ok(())
            }
            PotentialSpec::StaticUniform { .. } => Ok(()),
            PotentialSpec::Sum(parts) => parts.iter().try_for_each(|p| p.validate()),
        }
    }

    /// `(phi, A)` at position `r` and time `t`; `c` is the speed of light.
    pub fn sample_potentials(&self, r: Vec3, t: f64, c: f64) -> Potentials {
        match self {
            PotentialSpec::StandingWave { e0, k, envelope } => {
                let kn = norm(*k);
                let amp = -(dot(*k, r)).cos() * (c * kn * t).sin() * envelope.value(t) / (c * kn);
                Potentials {
                    phi: 0.0,
                    a: scale(*e0, amp),
                }
            }
            PotentialSpec::EfGaugeLaser { profile, k_hat } => {
                let eta = t - dot(*k_hat, r) / c;
                let (e, _) = profile.eval(eta);
                let s = dot(r, e);
                Potentials {
                    phi: -s,
                    a: scale(*k_hat, -s / c),
                }
            }
            PotentialSpec::SoftCore { z, a } => Potentials {
                phi: -z / (dot(r, r) + a * a).sqrt(),
                a: [0.0; 3],
            },
            PotentialSpec::StaticUniform { e0 } => Potentials {
                phi: -dot(r, *e0),
                a: [0.0; 3],
            },
            PotentialSpec::Sum(parts) => parts.iter().fold(Potentials::default(), |acc, p| {
                let s = p.sample_potentials(r, t, c);
                Potentials {
                    phi: acc.phi + s.phi,
                    a: add(acc.a, s.a),
                }
            }),
        }
    }

    /// Closed-form `E` and `B` at `(r, t)`.
    pub fn derive_fields(&self, r: Vec3, t: f64, c: f64) -> EmFields {
        match self {
            PotentialSpec::StandingWave { e0, k, envelope } => {
                let kn = norm(*k);
                let kr = dot(*k, r);
                let (s, co) = (c * kn * t).sin_cos();
                let w = envelope.value(t);
                let dw = envelope.derivative(t);
                EmFields {
                    e: scale(*e0, kr.cos() * (co * w + s * dw / (c * kn))),
                    b: scale(cross(*k, *e0), kr.sin() * s * w / (c * kn)),
                }
            }
            PotentialSpec::EfGaugeLaser { profile, k_hat } => {
                let eta = t - dot(*k_hat, r) / c;
                let (e, _) = profile.eval(eta);
                EmFields {
                    e,
                    b: scale(cross(*k_hat, e), 1.0 / c),
                }
            }
            PotentialSpec::SoftCore { z, a } => {
                let d = (dot(r, r) + a * a).powf(1.5);
                EmFields {
                    e: scale(r, -z / d),
                    b: [0.0; 3],
                }
            }
            PotentialSpec::StaticUniform { e0 } => EmFields {
                e: *e0,
                b: [0.0; 3],
            },
            PotentialSpec::Sum(parts) => parts.iter().fold(EmFields::default(), |acc, p| {
                let f = p.derive_fields(r, t, c);
                EmFields {
                    e: add(acc.e, f.e),
                    b: add(acc.b, f.b),
                }
            }),
        }
    }
}
