//! Off-resonant photon scattering: Raman channel rates, the inelastic and
//! elastic (Rayleigh) decoherence rates of a qubit superposition, and the
//! two-ion decoherence budget including metastable decay.
//!
//! Scattered-photon polarization `s` runs over the spherical basis {−1, 0, +1};
//! the rates are already integrated over solid angle. Both the difference- and
//! sum-frequency terms of the Kramers-Heisenberg amplitude are kept. Qubit
//! populations are taken equal, which is where the ½ factors come from.
//!
//! Elastic channels (f = i) never enter the inelastic rate; they are handled
//! only through the elastic dephasing rate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{tensor, tensor_dot, AngularError};
use crate::constants::{C, HBAR};
use crate::species::{QubitSpec, SpeciesData, SublevelRef};
use crate::stark::{check_detuning, require_long_lived, LaserField, StarkError};

/// One Raman channel i → f and its rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterChannel {
    pub initial: SublevelRef,
    pub final_state: SublevelRef,
    /// s⁻¹
    pub rate: f64,
}

/// Decoherence rates of one ion, s⁻¹.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IonDecoherence {
    pub elastic: f64,
    pub inelastic: f64,
    /// A_D/2 of the qubit's D level.
    pub metastable: f64,
}

impl IonDecoherence {
    pub fn total(&self) -> f64 {
        self.elastic + self.inelastic + self.metastable
    }

    pub fn scattering(&self) -> f64 {
        self.elastic + self.inelastic
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceBudget {
    pub ions: [IonDecoherence; 2],
    /// Γ_tot^(2) = Σ_ions (elastic + inelastic + metastable), s⁻¹.
    pub total_two_ion: f64,
}

impl DecoherenceBudget {
    pub fn new(ions: [IonDecoherence; 2]) -> Self {
        DecoherenceBudget {
            ions,
            total_two_ion: ions[0].total() + ions[1].total(),
        }
    }

    /// Photon-scattering part of the two-ion rate (metastable decay removed).
    pub fn scattering_two_ion(&self) -> f64 {
        self.ions[0].scattering() + self.ions[1].scattering()
    }
}

fn a_coeff(s: &SpeciesData, k_level: usize, lower: usize) -> Result<f64, AngularError> {
    s.einstein_a(k_level, lower)
        .ok_or_else(|| AngularError::MissingTransition {
            upper: s.levels[k_level].label.clone(),
            lower: s.levels[lower].label.clone(),
        })
}

fn prepare(s: &SpeciesData, field: &LaserField, states: &[SublevelRef]) -> Result<f64, StarkError> {
    field.validate()?;
    for &st in states {
        require_long_lived(s, st)?;
    }
    let omega_l = field.omega();
    check_detuning(s, omega_l)?;
    Ok(omega_l)
}

/// Γ^{i→f}, the rate of scattering from sublevel `i` into sublevel `f` through all
/// P sublevels, s⁻¹. Zero when ω_L ≤ ω_fi (the channel is energetically closed).
/// `f == i` gives the Rayleigh rate of that state.
pub fn raman_rate(s: &SpeciesData, i: SublevelRef, f: SublevelRef, field: &LaserField) -> Result<f64, StarkError> {
    let omega_l = prepare(s, field, &[i, f])?;
    let omega_fi = s.omega(f.level, i.level);
    let stokes = omega_l - omega_fi;
    if stokes <= 0.0 || field.intensity == 0.0 {
        return Ok(0.0);
    }
    let eps = &field.polarization;
    let mut rate_sum = 0.0;
    for sc in -1..=1 {
        let mut amp = Complex64::new(0.0, 0.0);
        for k_level in s.intermediate_levels() {
            let couples_i = s.dipole_allowed(k_level, i.level);
            let couples_f = s.dipole_allowed(k_level, f.level);
            if !(couples_i && couples_f) {
                continue;
            }
            let a_ki = a_coeff(s, k_level, i.level)?;
            let a_kf = a_coeff(s, k_level, f.level)?;
            let omega_ki = s.omega(k_level, i.level);
            let omega_kf = s.omega(k_level, f.level);
            let two_jk = s.levels[k_level].two_j;
            let weight = (two_jk as f64 + 1.0) * (a_ki * a_kf / (omega_ki.powi(3) * omega_kf.powi(3))).sqrt();
            for k in s.sublevels_of(k_level) {
                let difference = tensor(s, f, sc, k) * tensor_dot(s, k, eps, i) / (omega_ki - omega_l);
                let sum = tensor_dot(s, f, eps, k) * tensor(s, k, sc, i) / (omega_l + omega_kf);
                amp += weight * (difference + sum);
            }
        }
        rate_sum += amp.norm_sqr();
    }
    Ok(3.0 * PI * C * C * field.intensity / (2.0 * HBAR) * stokes.powi(3) * rate_sum)
}

/// All S/D sublevels of a species, the possible initial and final scattering states.
pub fn long_lived_sublevels(s: &SpeciesData) -> Vec<SublevelRef> {
    s.long_lived_levels().flat_map(|l| s.sublevels_of(l)).collect()
}

/// Every channel out of `i`, including the Rayleigh channel f = i.
pub fn channels_from(s: &SpeciesData, i: SublevelRef, field: &LaserField) -> Result<Vec<ScatterChannel>, StarkError> {
    let omega_l = prepare(s, field, &[i])?;
    let finals = long_lived_sublevels(s);
    let eps = &field.polarization;
    // amplitudes[f][s]
    let mut amplitudes = vec![[Complex64::new(0.0, 0.0); 3]; finals.len()];
    for k_level in s.intermediate_levels() {
        if !s.dipole_allowed(k_level, i.level) {
            continue;
        }
        let a_ki = a_coeff(s, k_level, i.level)?;
        let omega_ki = s.omega(k_level, i.level);
        let two_jk = s.levels[k_level].two_j as f64;
        for k in s.sublevels_of(k_level) {
            let absorb_i = tensor_dot(s, k, eps, i);
            let emit_i = [-1, 0, 1].map(|sc| tensor(s, k, sc, i));
            if absorb_i == Complex64::new(0.0, 0.0) && emit_i.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (fi, &f) in finals.iter().enumerate() {
                if !s.dipole_allowed(k_level, f.level) {
                    continue;
                }
                let a_kf = a_coeff(s, k_level, f.level)?;
                let omega_kf = s.omega(k_level, f.level);
                let weight = (two_jk + 1.0) * (a_ki * a_kf).sqrt() / (omega_ki * omega_kf).powf(1.5);
                let absorb_f = tensor_dot(s, f, eps, k);
                for (si, sc) in (-1..=1).enumerate() {
                    let term = tensor(s, f, sc, k) * absorb_i / (omega_ki - omega_l)
                        + absorb_f * emit_i[si] / (omega_l + omega_kf);
                    amplitudes[fi][si] += weight * term;
                }
            }
        }
    }
    let pref = 3.0 * PI * C * C * field.intensity / (2.0 * HBAR);
    Ok(finals
        .iter()
        .zip(amplitudes)
        .map(|(&f, amp)| {
            let stokes = omega_l - s.omega(f.level, i.level);
            let rate = if stokes <= 0.0 {
                0.0
            } else {
                pref * stokes.powi(3) * amp.iter().map(|a| a.norm_sqr()).sum::<f64>()
            };
            ScatterChannel {
                initial: i,
                final_state: f,
                rate,
            }
        })
        .collect())
}

/// Γ_in = ½(Σ_{f≠↑} Γ^{↑→f} + Σ_{f≠↓} Γ^{↓→f}), s⁻¹.
pub fn inelastic_rate(s: &SpeciesData, qubit: &QubitSpec, field: &LaserField) -> Result<f64, StarkError> {
    let mut total = 0.0;
    for state in [qubit.up, qubit.down] {
        total += channels_from(s, state, field)?
            .iter()
            .filter(|c| c.final_state != state)
            .map(|c| c.rate)
            .sum::<f64>();
    }
    Ok(0.5 * total)
}

/// Elastic scattering amplitudes χ_s^{i→i} for s = −1, 0, +1.
pub fn elastic_amplitudes(s: &SpeciesData, i: SublevelRef, field: &LaserField) -> Result<[Complex64; 3], StarkError> {
    let omega_l = prepare(s, field, &[i])?;
    let eps = &field.polarization;
    let mut chi = [Complex64::new(0.0, 0.0); 3];
    for k_level in s.intermediate_levels() {
        if !s.dipole_allowed(k_level, i.level) {
            continue;
        }
        let a_ki = a_coeff(s, k_level, i.level)?;
        let omega_ki = s.omega(k_level, i.level);
        let weight = (s.levels[k_level].two_j as f64 + 1.0) * a_ki * (omega_l.powi(3) / omega_ki.powi(6)).sqrt();
        for k in s.sublevels_of(k_level) {
            for (si, sc) in (-1..=1).enumerate() {
                let term = tensor(s, i, sc, k) * tensor_dot(s, k, eps, i) / (omega_ki - omega_l)
                    + tensor_dot(s, i, eps, k) * tensor(s, k, sc, i) / (omega_l + omega_ki);
                chi[si] += weight * term;
            }
        }
    }
    Ok(chi)
}

/// Γ_el = (3πc²I/4ħ) Σ_s |χ_s^{↑→↑} − χ_s^{↓→↓}|², s⁻¹.
pub fn elastic_rate(s: &SpeciesData, qubit: &QubitSpec, field: &LaserField) -> Result<f64, StarkError> {
    let up = elastic_amplitudes(s, qubit.up, field)?;
    let down = elastic_amplitudes(s, qubit.down, field)?;
    let diff: f64 = up.iter().zip(&down).map(|(u, d)| (u - d).norm_sqr()).sum();
    Ok(3.0 * PI * C * C * field.intensity / (4.0 * HBAR) * diff)
}

/// Half the total decay rate of the qubit's D level.
pub fn metastable_rate(s: &SpeciesData, qubit: &QubitSpec) -> f64 {
    0.5 * s.metastable_rate(qubit.up.level).unwrap_or(0.0)
}

pub fn ion_decoherence(s: &SpeciesData, qubit: &QubitSpec, field: &LaserField) -> Result<IonDecoherence, StarkError> {
    Ok(IonDecoherence {
        elastic: elastic_rate(s, qubit, field)?,
        inelastic: inelastic_rate(s, qubit, field)?,
        metastable: metastable_rate(s, qubit),
    })
}

/// Γ_tot^(2) for two ions, each with its own species, qubit and local field.
pub fn total_decoherence(pair: [(&SpeciesData, &QubitSpec, &LaserField); 2]) -> Result<DecoherenceBudget, StarkError> {
    let [a, b] = pair;
    Ok(DecoherenceBudget::new([
        ion_decoherence(a.0, a.1, a.2)?,
        ion_decoherence(b.0, b.1, b.2)?,
    ]))
}
