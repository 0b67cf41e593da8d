//! Drude–Lorentz phonon bath and the rate factor `γ(ω)`.
//!
//! Sign convention: `ω > 0` is an upward (absorbing) transition weighted by
//! the thermal occupation `n(ω)`, `ω < 0` is a downward (emitting) transition
//! weighted by `n(|ω|) + 1`. With this choice `γ(−ω) = e^{βω} γ(ω)` and the
//! secular generator relaxes to the Boltzmann distribution.

use core::f64::consts::PI;

use thiserror::Error;

use crate::units::BOLTZMANN_CM1_PER_K;

/// Bath parameters out of range or a bad frequency argument.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BathError {
    /// A bath parameter is nonpositive or not finite.
    #[error("invalid bath parameter {name} = {value}: must be positive and finite")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Supplied value.
        value: f64,
    },
    /// The spectral density is only defined for `ω ≥ 0`.
    #[error("spectral density evaluated at negative frequency {0}")]
    NegativeFrequency(f64),
}

/// Reorganization energy, cutoff and temperature of an identical,
/// independent Drude–Lorentz bath on every site.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BathSpec {
    reorg_energy: f64,
    cutoff: f64,
    temperature: f64,
}

impl BathSpec {
    /// Reorganization energy used for FMO, cm⁻¹.
    pub const FMO_REORG_ENERGY: f64 = 35.0;
    /// Bath cutoff used for FMO, cm⁻¹.
    pub const FMO_CUTOFF: f64 = 150.0;

    /// `reorg_energy` and `cutoff` in cm⁻¹, `temperature` in K.
    pub fn new(reorg_energy: f64, cutoff: f64, temperature: f64) -> Result<Self, BathError> {
        for (name, value) in [
            ("reorg_energy", reorg_energy),
            ("cutoff", cutoff),
            ("temperature", temperature),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(BathError::InvalidParameter { name, value });
            }
        }
        Ok(Self {
            reorg_energy,
            cutoff,
            temperature,
        })
    }

    /// FMO bath (`E_r` = 35 cm⁻¹, `ω_c` = 150 cm⁻¹) at `temperature`.
    pub fn fmo(temperature: f64) -> Result<Self, BathError> {
        Self::new(Self::FMO_REORG_ENERGY, Self::FMO_CUTOFF, temperature)
    }

    /// Same bath at a different temperature.
    pub fn with_temperature(&self, temperature: f64) -> Result<Self, BathError> {
        Self::new(self.reorg_energy, self.cutoff, temperature)
    }

    /// `E_r` in cm⁻¹.
    pub fn reorg_energy(&self) -> f64 {
        self.reorg_energy
    }

    /// `ω_c` in cm⁻¹.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Temperature in K.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `β = 1/(k_B T)` in cm.
    pub fn beta(&self) -> f64 {
        1.0 / (BOLTZMANN_CM1_PER_K * self.temperature)
    }

    /// `J(ω) = (2E_r/π) ω ω_c / (ω² + ω_c²)` for `ω ≥ 0`.
    pub fn spectral_density(&self, omega: f64) -> Result<f64, BathError> {
        if omega < 0.0 {
            return Err(BathError::NegativeFrequency(omega));
        }
        Ok(self.drude_lorentz(omega))
    }

    fn drude_lorentz(&self, omega: f64) -> f64 {
        let wc = self.cutoff;
        2.0 * self.reorg_energy / PI * omega * wc / (omega * omega + wc * wc)
    }

    /// Bose occupation `n(ω) = 1/(e^{βω} − 1)` for `ω > 0`.
    pub fn occupation(&self, omega: f64) -> f64 {
        1.0 / libm::expm1(self.beta() * omega)
    }

    /// `γ(ω) = 2π J(|ω|) |n(ω)|`, with the `ω → 0` limit `4E_r/(βω_c)`.
    pub fn gamma(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return self.gamma_zero();
        }
        let w = omega.abs();
        let n = self.occupation(w);
        let thermal = if omega > 0.0 { n } else { n + 1.0 };
        2.0 * PI * self.drude_lorentz(w) * thermal
    }

    /// Pure-dephasing rate factor `γ(0) = 4E_r/(βω_c)`.
    pub fn gamma_zero(&self) -> f64 {
        4.0 * self.reorg_energy / (self.beta() * self.cutoff)
    }
}
