//! Physical constants and unit conversions.
//!
//! Internally every energy and rate is in cm⁻¹ with ħ = 1, so times are in
//! units of 1/cm⁻¹ ("cm units").

use core::f64::consts::PI;

/// Boltzmann constant in cm⁻¹/K.
pub const BOLTZMANN_CM1_PER_K: f64 = 0.695_034_8;

/// Speed of light in cm/ps.
pub const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;

/// Multiplier taking an angular rate in cm⁻¹ to ps⁻¹ (2πc).
pub const CM1_TO_PS1: f64 = 2.0 * PI * SPEED_OF_LIGHT_CM_PER_PS;

/// Rate in cm⁻¹ to ps⁻¹.
#[inline]
pub fn rate_cm1_to_ps1(rate: f64) -> f64 {
    rate * CM1_TO_PS1
}

/// Time in picoseconds to internal cm units.
#[inline]
pub fn time_ps_to_cm(t_ps: f64) -> f64 {
    t_ps * CM1_TO_PS1
}

/// Time in internal cm units to picoseconds.
#[inline]
pub fn time_cm_to_ps(t_cm: f64) -> f64 {
    t_cm / CM1_TO_PS1
}
