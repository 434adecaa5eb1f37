//! CODATA 2018 physical constants, SI units.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
/// Elementary charge, C.
pub const E0: f64 = 1.602_176_634e-19;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// The full constant set as a value, for callers that prefer to pass it around.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub epsilon0: f64,
    pub e0: f64,
    pub amu: f64,
}

pub const CODATA2018: PhysicalConstants = PhysicalConstants {
    hbar: HBAR,
    c: C,
    epsilon0: EPSILON0,
    e0: E0,
    amu: AMU,
};

/// Angular frequency (rad/s) of light with the given vacuum wavelength (m).
pub fn wavelength_to_angular(wavelength: f64) -> f64 {
    2.0 * PI * C / wavelength
}

/// Vacuum wavelength (m) of light with the given angular frequency (rad/s).
pub fn angular_to_wavelength(omega: f64) -> f64 {
    2.0 * PI * C / omega
}

/// Angular frequency (rad/s) of a wavenumber in cm⁻¹.
pub fn wavenumber_to_angular(wavenumber_cm: f64) -> f64 {
    2.0 * PI * C * wavenumber_cm * 100.0
}
