//! Single-beam AC Stark shifts of S and D sublevels, qubit differential shifts
//! and magic-wavelength search.
//!
//! Both the rotating and counter-rotating (Bloch-Siegert) terms are always
//! summed; nothing here is truncated to the rotating-wave term.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::angular::{dipole_moment_sq, AngularError};
use crate::constants::{angular_to_wavelength, wavelength_to_angular, C, EPSILON0, HBAR};
use crate::species::{QubitSpec, SpeciesData, SublevelRef};

/// Minimum laser detuning from any electric-dipole line, rad/s (2π × 10 GHz).
pub const DIPOLE_GUARD: f64 = 2.0 * PI * 10e9;
/// Minimum laser detuning from any S–D quadrupole line, rad/s (2π × 100 MHz).
pub const QUADRUPOLE_GUARD: f64 = 2.0 * PI * 100e6;

pub const MIN_WAVELENGTH: f64 = 200e-9;
pub const MAX_WAVELENGTH: f64 = 5e-6;

#[derive(Debug, Error, PartialEq)]
pub enum StarkError {
    #[error("laser is {detuning_ghz:.3} GHz from the {upper}-{lower} dipole line (guard 10 GHz)")]
    NearDipoleResonance {
        upper: String,
        lower: String,
        detuning_ghz: f64,
    },
    #[error("laser is {detuning_mhz:.3} MHz from the {upper}-{lower} quadrupole line (guard 100 MHz)")]
    NearQuadrupoleResonance {
        upper: String,
        lower: String,
        detuning_mhz: f64,
    },
    #[error("wavelength {0:e} m outside [200 nm, 5 um]")]
    WavelengthOutOfRange(f64),
    #[error("intensity must be finite and >= 0, got {0}")]
    BadIntensity(f64),
    #[error("polarization not normalized: sum |eps_q|^2 = {0}")]
    BadPolarization(f64),
    #[error("{0} is not an S or D level")]
    NotLongLived(String),
    #[error(transparent)]
    Angular(#[from] AngularError),
}

/// Spherical polarization amplitudes (ε₋₁, ε₀, ε₊₁).
pub type Polarization = [Complex64; 3];

/// Linear polarization perpendicular to the quantization axis: equal σ⁺ and σ⁻.
pub fn linear_polarization() -> Polarization {
    [
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
    ]
}

/// Linear polarization along the quantization axis (pure π).
pub fn pi_polarization() -> Polarization {
    [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserField {
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Intensity at the ion, W/m².
    pub intensity: f64,
    pub polarization: Polarization,
}

impl LaserField {
    pub fn new(wavelength: f64, intensity: f64, polarization: Polarization) -> Result<Self, StarkError> {
        let f = LaserField {
            wavelength,
            intensity,
            polarization,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), StarkError> {
        if !(self.wavelength >= MIN_WAVELENGTH && self.wavelength <= MAX_WAVELENGTH) {
            return Err(StarkError::WavelengthOutOfRange(self.wavelength));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(StarkError::BadIntensity(self.intensity));
        }
        let norm: f64 = self.polarization.iter().map(|e| e.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(StarkError::BadPolarization(norm));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        wavelength_to_angular(self.wavelength)
    }

    pub fn with_wavelength(&self, wavelength: f64) -> Self {
        LaserField { wavelength, ..*self }
    }

    pub fn with_intensity(&self, intensity: f64) -> Self {
        LaserField { intensity, ..*self }
    }

    /// Time-averaged squared field ⟨E²⟩ = E₀²/2 = I/(ε₀c).
    pub fn mean_square_field(&self) -> f64 {
        self.intensity / (EPSILON0 * C)
    }
}

/// An energy shift expressed as an angular frequency ΔE/ħ, rad/s.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct StarkShift {
    pub value: f64,
}

impl StarkShift {
    /// Proportionality constant between ⟨E²⟩ and the shift.
    pub fn gamma(&self, field: &LaserField) -> f64 {
        self.value / field.mean_square_field()
    }
}

/// Checks the dipole and quadrupole detuning guards for this species.
pub fn check_detuning(s: &SpeciesData, omega_l: f64) -> Result<(), StarkError> {
    for t in &s.dipole_transitions {
        let (u, l) = (
            s.level_index(&t.upper).expect("validated"),
            s.level_index(&t.lower).expect("validated"),
        );
        let det = omega_l - s.omega(u, l);
        if det.abs() < DIPOLE_GUARD {
            return Err(StarkError::NearDipoleResonance {
                upper: t.upper.clone(),
                lower: t.lower.clone(),
                detuning_ghz: det / (2.0 * PI * 1e9),
            });
        }
    }
    for (is, ls) in s.levels.iter().enumerate().filter(|(_, l)| l.l == 0) {
        for (id, ld) in s.levels.iter().enumerate().filter(|(_, l)| l.l == 2) {
            let det = omega_l - s.omega(id, is);
            if det.abs() < QUADRUPOLE_GUARD {
                return Err(StarkError::NearQuadrupoleResonance {
                    upper: ld.label.clone(),
                    lower: ls.label.clone(),
                    detuning_mhz: det / (2.0 * PI * 1e6),
                });
            }
        }
    }
    Ok(())
}

/// Resonance wavelengths (vacuum, m) of every listed dipole transition.
pub fn dipole_resonances(s: &SpeciesData) -> Vec<f64> {
    s.dipole_transitions
        .iter()
        .map(|t| {
            let (u, l) = (
                s.level_index(&t.upper).expect("validated"),
                s.level_index(&t.lower).expect("validated"),
            );
            angular_to_wavelength(s.omega(u, l))
        })
        .collect()
}

pub(crate) fn require_long_lived(s: &SpeciesData, state: SublevelRef) -> Result<(), StarkError> {
    let lv = &s.levels[state.level];
    if lv.l == 0 || lv.l == 2 {
        Ok(())
    } else {
        Err(StarkError::NotLongLived(lv.label.clone()))
    }
}

/// ΔE/ħ of `state` in a single beam, summed over all P sublevels and polarization
/// components:
///
/// −Σ_{k,q} I|ε_q|²μ²_{ki,q}/(2ε₀ħ²c) · [1/(ω_ki − ω_L) + 1/(ω_ki + ω_L)]
///
/// The overall minus sign makes the ground-state shift negative far red of
/// every resonance.
pub fn ac_stark_shift(s: &SpeciesData, state: SublevelRef, f: &LaserField) -> Result<StarkShift, StarkError> {
    f.validate()?;
    require_long_lived(s, state)?;
    let omega_l = f.omega();
    check_detuning(s, omega_l)?;
    let prefactor = f.intensity / (2.0 * EPSILON0 * HBAR * HBAR * C);
    let mut total = 0.0;
    for k_level in s.intermediate_levels() {
        if !s.dipole_allowed(k_level, state.level) {
            continue;
        }
        let omega_ki = s.omega(k_level, state.level);
        let detuning_sum = 1.0 / (omega_ki - omega_l) + 1.0 / (omega_ki + omega_l);
        for q in -1..=1 {
            let weight = f.polarization[(q + 1) as usize].norm_sqr();
            if weight == 0.0 {
                continue;
            }
            let two_mk = state.two_m + 2 * q;
            if two_mk.abs() > s.levels[k_level].two_j as i32 {
                continue;
            }
            let k = SublevelRef {
                level: k_level,
                two_m: two_mk,
            };
            let mu_sq = dipole_moment_sq(s, k, state, q)?;
            total += weight * mu_sq * detuning_sum;
        }
    }
    Ok(StarkShift {
        value: -prefactor * total,
    })
}

/// Shifts of both qubit states in one beam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitShifts {
    pub up: StarkShift,
    pub down: StarkShift,
}

impl QubitShifts {
    /// Δ_Δ = Δ_↑ − Δ_↓.
    pub fn differential(&self) -> StarkShift {
        StarkShift {
            value: self.up.value - self.down.value,
        }
    }

    /// Δ_Σ = Δ_↑ + Δ_↓ (twice the common shift).
    pub fn common(&self) -> StarkShift {
        StarkShift {
            value: self.up.value + self.down.value,
        }
    }
}

pub fn qubit_shifts(s: &SpeciesData, qubit: &QubitSpec, f: &LaserField) -> Result<QubitShifts, StarkError> {
    Ok(QubitShifts {
        up: ac_stark_shift(s, qubit.up, f)?,
        down: ac_stark_shift(s, qubit.down, f)?,
    })
}

/// Δ_Δ = Δ_↑ − Δ_↓ in a single beam.
pub fn differential_stark_shift(s: &SpeciesData, qubit: &QubitSpec, f: &LaserField) -> Result<StarkShift, StarkError> {
    qubit_shifts(s, qubit, f).map(|q| q.differential())
}

/// Scan step used to bracket magic wavelengths, m.
pub const MAGIC_SCAN_STEP: f64 = 0.1e-9;

/// Wavelengths in `[lambda_min, lambda_max]` where the differential shift crosses
/// zero, sorted ascending.
///
/// Roots are bracketed by sign changes on a [`MAGIC_SCAN_STEP`] grid; brackets
/// that straddle a dipole resonance (a pole, not a root) or touch the guard
/// region are discarded. Each root is bisected to a relative width below 10⁻⁹
/// (in practice to the floating-point limit).
pub fn find_magic_wavelengths(
    s: &SpeciesData,
    qubit: &QubitSpec,
    template: &LaserField,
    lambda_min: f64,
    lambda_max: f64,
) -> Vec<f64> {
    find_magic_wavelengths_with_step(s, qubit, template, lambda_min, lambda_max, MAGIC_SCAN_STEP)
}

pub fn find_magic_wavelengths_with_step(
    s: &SpeciesData,
    qubit: &QubitSpec,
    template: &LaserField,
    lambda_min: f64,
    lambda_max: f64,
    step: f64,
) -> Vec<f64> {
    if !(lambda_max > lambda_min) || !(step > 0.0) {
        return Vec::new();
    }
    let eval = |lambda: f64| -> Option<f64> {
        differential_stark_shift(s, qubit, &template.with_wavelength(lambda))
            .ok()
            .map(|d| d.value)
    };
    let poles = dipole_resonances(s);
    let n = ((lambda_max - lambda_min) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| (lambda_min + i as f64 * step).min(lambda_max))
        .collect();
    let values: Vec<Option<f64>> = grid.iter().map(|&l| eval(l)).collect();

    let mut roots = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        let (a, b) = (grid[i], grid[i + 1]);
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else {
            continue;
        };
        if poles.iter().any(|&p| p >= a && p <= b) {
            continue;
        }
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        if let Some(r) = bisect(&eval, a, b, fa) {
            roots.push(r);
        }
    }
    if let Some(&Some(last)) = values.last() {
        if last == 0.0 {
            roots.push(*grid.last().unwrap());
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup();
    roots
}

fn bisect(eval: &impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Option<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = eval(mid)?;
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let (va, vb) = (eval(a)?, eval(b)?);
    Some(if va.abs() <= vb.abs() { a } else { b })
}
