//! Two-beam moving-lattice gate: lattice Stark means, spin-dependent force
//! coefficients, echo-symmetrized geometric phases, gate timing, spectator
//! closure and the intrinsic and technical error budget.
//!
//! The gate is two pulses of length τ_g/2 separated by a spin echo. Each pulse
//! closes `loops` phase-space circles of the gate mode at detuning
//! δ_k = 2π·loops/(τ_g/2); the nominal gate uses one loop per pulse, δ_k = 4π/τ_g.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::AMU;
use crate::modes::{lamb_dicke, normal_modes, CrystalConfig, ModeSolution, ModesError};
use crate::scattering::{ion_decoherence, DecoherenceBudget, IonDecoherence};
use crate::species::{QubitSpec, SpeciesData};
use crate::stark::{linear_polarization, qubit_shifts, LaserField, Polarization, StarkError};

/// |cos Δφ₀| below which the ions sit at a lattice node pair and no force survives.
pub const MIN_SPACING_COS: f64 = 1e-12;
/// |Δ₀,Δ| below this fraction of |Δ₀,Σ| counts as a magic wavelength.
pub const MAGIC_RELATIVE_THRESHOLD: f64 = 1e-9;
/// Largest loop count per pulse tried when closing the spectator mode.
pub const MAX_LOOPS: u32 = 8;

#[derive(Debug, Error, PartialEq)]
pub enum GateError {
    #[error("single-beam shifts of one state have opposite signs ({0:e}, {1:e})")]
    OppositeBeamShifts(f64, f64),
    #[error("differential shift vanishes: gate impossible at this wavelength")]
    MagicWavelength,
    #[error("ions sit at equivalent lattice nodes (cos = {0:e}): gate impossible")]
    LatticeNode(f64),
    #[error("gate detuning must be non-zero")]
    ZeroDetuning,
    #[error("Lamb-Dicke product must be positive, got {0:e}")]
    BadLambDicke(f64),
    #[error("invalid beam parameter {what}: {value}")]
    BadBeam { what: &'static str, value: f64 },
    #[error("gate mode {0} out of range")]
    BadMode(usize),
    #[error("at {wavelength_nm:.4} nm: {source}")]
    Stark {
        wavelength_nm: f64,
        #[source]
        source: StarkError,
    },
    #[error(transparent)]
    Modes(#[from] ModesError),
}

/// Two identical-power Gaussian beams crossing at the ions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Power of each beam, W.
    pub power: f64,
    /// 1/e² intensity radius, m.
    pub waist: f64,
    /// Angle between each beam and the trap axis, rad.
    pub beam_angle: f64,
    /// Half the optical phase difference of the two beams, φ_Δ, rad.
    pub phase_delta: f64,
    /// Power of beam 2 relative to beam 1.
    pub imbalance: f64,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        BeamGeometry {
            power: 0.1,
            waist: 10e-6,
            beam_angle: PI / 4.0,
            phase_delta: 0.0,
            imbalance: 1.0,
        }
    }
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<(), GateError> {
        let checks = [
            ("power", self.power, self.power > 0.0),
            ("waist", self.waist, self.waist > 0.0),
            ("beam angle", self.beam_angle, self.beam_angle.abs() < PI / 2.0),
            ("imbalance", self.imbalance, self.imbalance >= 0.0),
        ];
        for (what, value, ok) in checks {
            if !(value.is_finite() && ok) {
                return Err(GateError::BadBeam { what, value });
            }
        }
        Ok(())
    }

    /// 2P/(πw²) at the centre of beam 1, W/m².
    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power / (PI * self.waist * self.waist)
    }

    /// Beam-1 intensity at axial offset `x` from the crossing point, W/m².
    pub fn intensity_at(&self, x: f64) -> f64 {
        let r = x * self.beam_angle.sin();
        self.peak_intensity() * (-2.0 * r * r / (self.waist * self.waist)).exp()
    }

    /// Axial component of k_Δ = ½(k₁ − k₂), rad/m.
    pub fn k_delta_axial(&self, wavelength: f64) -> f64 {
        2.0 * PI / wavelength * self.beam_angle.cos()
    }
}

/// Where the ions sit relative to the lattice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingModel {
    /// Spacing trimmed so that |cos(φ₀,₂ − φ₀,₁)| = 1.
    #[default]
    Optimal,
    /// The bare Coulomb equilibrium spacing.
    Equilibrium,
}

/// Intensity seen by each ion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityProfile {
    /// Both ions at beam centre.
    #[default]
    Peak,
    /// Gaussian falloff at the equilibrium positions.
    Gaussian,
}

/// Technical noise levels fed to the extrinsic error formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Shot-to-shot fractional intensity error ΔI/I.
    pub intensity: f64,
    /// Fractional intensity mismatch between the two echo pulses ΔI₁₂/I.
    pub pulse_imbalance: f64,
    /// Mode or lattice frequency error Δω, rad/s.
    pub frequency: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            intensity: 1e-3,
            pulse_imbalance: 1e-4,
            frequency: 2.0 * PI * 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOptions {
    pub spacing: SpacingModel,
    pub profile: IntensityProfile,
    /// Force a particular gate mode; `None` picks the fastest.
    pub gate_mode: Option<usize>,
    pub include_metastable: bool,
    pub noise: NoiseModel,
}

impl Default for GateOptions {
    fn default() -> Self {
        GateOptions {
            spacing: SpacingModel::Optimal,
            profile: IntensityProfile::Peak,
            gate_mode: None,
            include_metastable: true,
            noise: NoiseModel::default(),
        }
    }
}

/// Reference ion that fixes the trap curvature: ⁴⁰Ca⁺ at 2π × 2 MHz by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapReference {
    /// kg
    pub mass: f64,
    /// rad/s
    pub axial_frequency: f64,
}

impl Default for TrapReference {
    fn default() -> Self {
        TrapReference {
            mass: 39.962_590_863 * AMU,
            axial_frequency: 2.0 * PI * 2e6,
        }
    }
}

/// Geometric (Δ₀) and arithmetic (Δ₀′) means of one state's two single-beam shifts.
pub fn lattice_stark_means(shift_beam1: f64, shift_beam2: f64) -> Result<(f64, f64), GateError> {
    if shift_beam1 * shift_beam2 < 0.0 {
        return Err(GateError::OppositeBeamShifts(shift_beam1, shift_beam2));
    }
    let sign = if shift_beam1 + shift_beam2 < 0.0 { -1.0 } else { 1.0 };
    let geometric = sign * (shift_beam1.abs() * shift_beam2.abs()).sqrt();
    Ok((geometric, 0.5 * (shift_beam1 + shift_beam2)))
}

/// Lattice-modulated shifts of one ion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IonLatticeShifts {
    /// Δ₀,Δ = Δ₀(↑) − Δ₀(↓), rad/s.
    pub differential: f64,
    /// Δ₀,Σ = Δ₀(↑) + Δ₀(↓), rad/s.
    pub common: f64,
    /// Δ₀′(↑) − Δ₀′(↓), rad/s.
    pub quasi_static_differential: f64,
}

/// Combines both beams' single-beam shifts of both qubit states at one ion.
pub fn ion_lattice_shifts(
    s: &SpeciesData,
    qubit: &QubitSpec,
    beam1: &LaserField,
    beam2: &LaserField,
) -> Result<IonLatticeShifts, StarkError> {
    let b1 = qubit_shifts(s, qubit, beam1)?;
    let b2 = qubit_shifts(s, qubit, beam2)?;
    // same polarization in both beams: each state's shifts share a sign
    let (up0, up1) = lattice_stark_means(b1.up.value, b2.up.value).unwrap_or((0.0, 0.5 * (b1.up.value + b2.up.value)));
    let (dn0, dn1) =
        lattice_stark_means(b1.down.value, b2.down.value).unwrap_or((0.0, 0.5 * (b1.down.value + b2.down.value)));
    Ok(IonLatticeShifts {
        differential: up0 - dn0,
        common: up0 + dn0,
        quasi_static_differential: up1 - dn1,
    })
}

/// F_{k,Δ,+}, F_{k,Δ,−}, F_{k,Σ,+} for one mode, rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForceCoefficients {
    pub delta_plus: Complex64,
    pub delta_minus: Complex64,
    pub sigma_plus: Complex64,
}

impl ForceCoefficients {
    /// Drive amplitude for spin configuration `(ion1_up, ion2_up)`.
    pub fn for_spins(&self, ion1_up: bool, ion2_up: bool) -> Complex64 {
        let d = match (ion1_up, ion2_up) {
            (true, true) => self.delta_plus,
            (true, false) => self.delta_minus,
            (false, true) => -self.delta_minus,
            (false, false) => -self.delta_plus,
        };
        d + self.sigma_plus
    }
}

/// Force coefficients of one mode from its Lamb-Dicke factors `eta`, lattice
/// phases φ₀,ⱼ, and per-ion differential and common shifts.
pub fn force_coefficients(
    eta: [f64; 2],
    phases: [f64; 2],
    differential: [f64; 2],
    common: [f64; 2],
) -> ForceCoefficients {
    let half_i = Complex64::new(0.0, 0.5);
    let w = [
        eta[0] * Complex64::from_polar(1.0, -phases[0]),
        eta[1] * Complex64::from_polar(1.0, -phases[1]),
    ];
    ForceCoefficients {
        delta_plus: half_i * (w[0] * differential[0] + w[1] * differential[1]),
        delta_minus: half_i * (w[0] * differential[0] - w[1] * differential[1]),
        sigma_plus: half_i * (w[0] * common[0] + w[1] * common[1]),
    }
}

/// Two-ion phases ordered ↑↑, ↑↓, ↓↑, ↓↓, rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GatePhases {
    /// Φ′ after one pulse.
    pub single_pulse: [f64; 4],
    /// Φ after both echo-separated pulses.
    pub echo: [f64; 4],
}

impl GatePhases {
    /// Φ(↑↑) − Φ(↑↓) of the echo sequence.
    pub fn entangling_phase(&self) -> f64 {
        self.echo[0] - self.echo[1]
    }
}

const SPIN_ORDER: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];

/// Closed-form phases for `loops` circles per pulse at detuning `delta`.
pub fn geometric_phases(f: &ForceCoefficients, delta: f64, loops: u32) -> Result<GatePhases, GateError> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(GateError::ZeroDetuning);
    }
    let scale = delta.signum() * 2.0 * PI * loops as f64 / (delta * delta);
    let single = SPIN_ORDER.map(|(a, b)| scale * f.for_spins(a, b).norm_sqr());
    let echo = SPIN_ORDER.map(|(a, b)| scale * (f.for_spins(a, b).norm_sqr() + f.for_spins(!a, !b).norm_sqr()));
    Ok(GatePhases {
        single_pulse: single,
        echo,
    })
}

/// (τ_g, δ_k) for two single-loop pulses:
/// τ_g = √(2π²/|η₁η₂ cos Δφ₀ Δ₁Δ₂|), δ_k = 4π/τ_g.
pub fn gate_duration(eta1: f64, eta2: f64, dphi: f64, shift1: f64, shift2: f64) -> Result<(f64, f64), GateError> {
    if shift1 == 0.0 || shift2 == 0.0 {
        return Err(GateError::MagicWavelength);
    }
    let c = dphi.cos();
    if c.abs() < MIN_SPACING_COS {
        return Err(GateError::LatticeNode(c));
    }
    let strength = (eta1 * eta2 * c * shift1 * shift2).abs();
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(GateError::BadLambDicke(eta1 * eta2));
    }
    let tau = (2.0 * PI * PI / strength).sqrt();
    Ok((tau, 4.0 * PI / tau))
}

/// |4π η₁η₂ cos Δφ₀ Δ₁Δ₂ / δ²|, equal to π/2 at the operating point.
pub fn phase_condition(eta1: f64, eta2: f64, dphi: f64, shift1: f64, shift2: f64, delta: f64) -> f64 {
    (4.0 * PI * eta1 * eta2 * dphi.cos() * shift1 * shift2 / (delta * delta)).abs()
}

/// Timing that closes both modes' trajectories at the end of each pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectatorClosure {
    /// Total gate time, s.
    pub tau_g: f64,
    /// Gate-mode detuning, rad/s.
    pub delta_k: f64,
    /// Gate-mode loops per pulse.
    pub loops: u32,
    /// Spectator loops per pulse (may be negative when the spectator is red of the drive).
    pub spectator_loops: i64,
    /// Factor by which both beam intensities must be scaled to keep the π/2 condition.
    pub intensity_factor: f64,
    /// Set when no commensurate timing was found within 2× nominal; the other
    /// fields are then nominal.
    pub warning: bool,
}

/// Chooses a pulse length that is a whole number of periods of the gate-mode
/// detuning and of the spectator detuning, closest to the nominal gate time.
///
/// With pulse length T, gate detuning 2πn/T and mode splitting ΔΩ = Ω_s − Ω_g,
/// the spectator closes when ΔΩ·T/2π is an integer. For each n the integer
/// nearest to T₀√n·|ΔΩ|/2π is taken, which keeps the intensity factor
/// √n·T₀/T close to one.
pub fn spectator_closure(
    mode_frequencies: &[f64],
    gate_mode: usize,
    tau_nominal: f64,
    delta_nominal: f64,
) -> SpectatorClosure {
    let nominal = SpectatorClosure {
        tau_g: tau_nominal,
        delta_k: delta_nominal,
        loops: 1,
        spectator_loops: 0,
        intensity_factor: 1.0,
        warning: false,
    };
    let spectators: Vec<f64> = mode_frequencies
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != gate_mode)
        .map(|(_, &w)| w - mode_frequencies[gate_mode])
        .collect();
    if spectators.is_empty() {
        return nominal;
    }
    let split = spectators[0];
    let pulse_nominal = 0.5 * tau_nominal;
    let mut best: Option<SpectatorClosure> = None;
    for n in 1..=MAX_LOOPS {
        let target = pulse_nominal * (n as f64).sqrt() * split.abs() / (2.0 * PI);
        let m = target.round().max(1.0);
        let pulse = 2.0 * PI * m / split.abs();
        let tau = 2.0 * pulse;
        if tau > 2.0 * tau_nominal {
            continue;
        }
        let delta = 2.0 * PI * n as f64 / pulse;
        let spectator_detuning = split + delta;
        if spectator_detuning.abs() < 1e-9 * delta {
            continue;
        }
        // every spectator must close, not only the first
        let closes = spectators.iter().all(|&s| {
            let cycles = s * pulse / (2.0 * PI);
            (cycles - cycles.round()).abs() <= 1e-3 * cycles.abs().max(1.0)
        });
        if !closes {
            continue;
        }
        let candidate = SpectatorClosure {
            tau_g: tau,
            delta_k: delta,
            loops: n,
            spectator_loops: (spectator_detuning * pulse / (2.0 * PI)).round() as i64,
            intensity_factor: (n as f64).sqrt() * pulse_nominal / pulse,
            warning: false,
        };
        let better = match &best {
            None => true,
            Some(b) => (tau - tau_nominal).abs() < (b.tau_g - tau_nominal).abs(),
        };
        if better {
            best = Some(candidate);
        }
    }
    best.unwrap_or(SpectatorClosure {
        warning: true,
        ..nominal
    })
}

/// Technical error terms for the chosen operating point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicErrors {
    /// (π²/4)(ΔI/I)²
    pub intensity_noise: f64,
    /// φ₀ = π/√(2η₁η₂), rad
    pub quasi_static_phase: f64,
    /// (π²/(2η₁η₂))(ΔI₁₂/I)²
    pub pulse_imbalance: f64,
    /// (π²/4)(Δω/δ_k)²
    pub frequency_error: f64,
}

pub fn extrinsic_errors(eta_product: f64, delta_k: f64, noise: &NoiseModel) -> Result<ExtrinsicErrors, GateError> {
    if !(eta_product > 0.0 && eta_product.is_finite()) {
        return Err(GateError::BadLambDicke(eta_product));
    }
    if delta_k == 0.0 {
        return Err(GateError::ZeroDetuning);
    }
    let quarter = PI * PI / 4.0;
    Ok(ExtrinsicErrors {
        intensity_noise: quarter * noise.intensity * noise.intensity,
        quasi_static_phase: PI / (2.0 * eta_product).sqrt(),
        pulse_imbalance: PI * PI / (2.0 * eta_product) * noise.pulse_imbalance * noise.pulse_imbalance,
        frequency_error: quarter * (noise.frequency / delta_k).powi(2),
    })
}

/// Largest ΔI₁₂/I that keeps the pulse-imbalance error below `target`.
pub fn max_pulse_imbalance(eta_product: f64, target: f64) -> Result<f64, GateError> {
    if !(eta_product > 0.0 && eta_product.is_finite()) {
        return Err(GateError::BadLambDicke(eta_product));
    }
    Ok((2.0 * eta_product * target).sqrt() / PI)
}

/// Everything wavelength-independent about a two-ion gate.
#[derive(Clone, Debug)]
pub struct GateSetup {
    pub ions: [SpeciesData; 2],
    pub qubits: [QubitSpec; 2],
    pub beams: BeamGeometry,
    pub polarization: Polarization,
    pub crystal: CrystalConfig,
    pub modes: ModeSolution,
    pub options: GateOptions,
}

impl GateSetup {
    pub fn new(
        ions: [SpeciesData; 2],
        qubits: [QubitSpec; 2],
        beams: BeamGeometry,
        reference: TrapReference,
        options: GateOptions,
    ) -> Result<Self, GateError> {
        beams.validate()?;
        let crystal = CrystalConfig::new(
            vec![ions[0].mass_kg(), ions[1].mass_kg()],
            reference.mass,
            reference.axial_frequency,
        )?;
        let modes = normal_modes(&crystal)?;
        if let Some(k) = options.gate_mode {
            if k >= modes.frequencies.len() {
                return Err(GateError::BadMode(k));
            }
        }
        Ok(GateSetup {
            ions,
            qubits,
            beams,
            polarization: linear_polarization(),
            crystal,
            modes,
            options,
        })
    }

    /// Standard qubits and default beams and trap.
    pub fn standard(ion1: SpeciesData, ion2: SpeciesData) -> Result<Self, GateError> {
        let qubits = [ion1.standard_qubit(), ion2.standard_qubit()];
        Self::new(
            [ion1, ion2],
            qubits,
            BeamGeometry::default(),
            TrapReference::default(),
            GateOptions::default(),
        )
    }

    /// Single-beam intensities (beam 1, beam 2) at each ion, W/m².
    pub fn ion_intensities(&self) -> [(f64, f64); 2] {
        let at = |j: usize| match self.options.profile {
            IntensityProfile::Peak => self.beams.peak_intensity(),
            IntensityProfile::Gaussian => self.beams.intensity_at(self.modes.equilibrium_positions[j]),
        };
        [0, 1].map(|j| {
            let i1 = at(j);
            (i1, i1 * self.beams.imbalance)
        })
    }

    /// Lattice phases φ₀,ⱼ = 2φ_Δ − 2k_Δ x₀,ⱼ.
    pub fn lattice_phases(&self, wavelength: f64) -> [f64; 2] {
        let base = 2.0 * self.beams.phase_delta;
        match self.options.spacing {
            SpacingModel::Optimal => [base, base],
            SpacingModel::Equilibrium => {
                let k = self.beams.k_delta_axial(wavelength);
                [0, 1].map(|j| base - 2.0 * k * self.modes.equilibrium_positions[j])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    /// m
    pub wavelength: f64,
    pub gate_mode: usize,
    /// s
    pub tau_g: f64,
    /// rad/s
    pub delta_k: f64,
    /// Loops per pulse.
    pub loops: u32,
    /// Γ_tot^(2) τ_g
    pub intrinsic_error: f64,
    /// Photon-scattering part of the intrinsic error.
    pub scattering_error: f64,
    pub budget: DecoherenceBudget,
    pub extrinsic: ExtrinsicErrors,
    /// Lamb-Dicke factors of the gate mode for each ion.
    pub eta: [f64; 2],
    pub shifts: [IonLatticeShifts; 2],
    pub forces: ForceCoefficients,
    pub spectator: SpectatorClosure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum GateOutcome {
    Ok(Box<GateResult>),
    Impossible { wavelength: f64, reason: String },
}

impl GateOutcome {
    pub fn result(&self) -> Option<&GateResult> {
        match self {
            GateOutcome::Ok(r) => Some(r),
            GateOutcome::Impossible { .. } => None,
        }
    }
}

/// Composes shifts, scattering, modes and timing at one wavelength (m).
pub fn evaluate_gate(setup: &GateSetup, wavelength: f64) -> Result<GateOutcome, GateError> {
    let stark_err = |source: StarkError| GateError::Stark {
        wavelength_nm: wavelength * 1e9,
        source,
    };
    let intensities = setup.ion_intensities();
    let mut shifts = [IonLatticeShifts::default(); 2];
    let mut rates = [IonDecoherence::default(); 2];
    for j in 0..2 {
        let (i1, i2) = intensities[j];
        let beam1 = LaserField::new(wavelength, i1, setup.polarization).map_err(stark_err)?;
        let beam2 = beam1.with_intensity(i2);
        shifts[j] = ion_lattice_shifts(&setup.ions[j], &setup.qubits[j], &beam1, &beam2).map_err(stark_err)?;
        let both = beam1.with_intensity(i1 + i2);
        rates[j] = ion_decoherence(&setup.ions[j], &setup.qubits[j], &both).map_err(stark_err)?;
        if !setup.options.include_metastable {
            rates[j].metastable = 0.0;
        }
    }
    let budget = DecoherenceBudget::new(rates);
    if shifts
        .iter()
        .any(|s| s.differential.abs() <= MAGIC_RELATIVE_THRESHOLD * s.common.abs())
    {
        return Ok(GateOutcome::Impossible {
            wavelength,
            reason: GateError::MagicWavelength.to_string(),
        });
    }

    let k_delta = setup.beams.k_delta_axial(wavelength);
    let eta_set = lamb_dicke(&setup.modes, &setup.crystal, k_delta);
    let phases = setup.lattice_phases(wavelength);
    let dphi = phases[1] - phases[0];
    let d = [shifts[0].differential, shifts[1].differential];

    let modes: Vec<usize> = match setup.options.gate_mode {
        Some(k) => vec![k],
        None => (0..setup.modes.frequencies.len()).collect(),
    };
    let mut best: Option<(usize, f64, f64)> = None;
    let mut impossible = GateError::MagicWavelength;
    for k in modes {
        let eta = &eta_set.eta[k];
        match gate_duration(eta[0], eta[1], dphi, d[0], d[1]) {
            Ok((tau, delta)) => {
                if best.is_none_or(|(_, t, _)| tau < t) {
                    best = Some((k, tau, delta));
                }
            }
            Err(e @ (GateError::MagicWavelength | GateError::LatticeNode(_) | GateError::BadLambDicke(_))) => {
                impossible = e;
            }
            Err(e) => return Err(e),
        }
    }
    let Some((gate_mode, tau_g, delta_k)) = best else {
        return Ok(GateOutcome::Impossible {
            wavelength,
            reason: impossible.to_string(),
        });
    };
    let eta = [eta_set.eta[gate_mode][0], eta_set.eta[gate_mode][1]];
    let forces = force_coefficients(eta, phases, d, [shifts[0].common, shifts[1].common]);
    let extrinsic = extrinsic_errors((eta[0] * eta[1]).abs(), delta_k, &setup.options.noise)?;
    let spectator = spectator_closure(&setup.modes.frequencies, gate_mode, tau_g, delta_k);
    Ok(GateOutcome::Ok(Box::new(GateResult {
        wavelength,
        gate_mode,
        tau_g,
        delta_k,
        loops: 1,
        intrinsic_error: budget.total_two_ion * tau_g,
        scattering_error: budget.scattering_two_ion() * tau_g,
        budget,
        extrinsic,
        eta,
        shifts,
        forces,
        spectator,
    })))
}
