//! Numerical integration of a displacement-driven mode, independent of the
//! closed-form phase expressions.
//!
//! In the mode's interaction frame the drive H = f(t) a† + f*(t) a with
//! f(t) = F r(t) e^{iδt} keeps a coherent state coherent. The displacement
//! obeys α̇ = −i f(t) and the accumulated phase θ̇ = −Re(f* α), which over a
//! closed loop equals twice the enclosed phase-space area.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate::ForceCoefficients;

/// Default number of integration steps per detuning period.
pub const STEPS_PER_PERIOD: f64 = 1000.0;
/// Coarsest allowed step, in detuning periods.
pub const MAX_STEP_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step {step:e} s exceeds 2π/(100|δ|) = {limit:e} s")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("duration must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("detuning must be non-zero and finite, got {0}")]
    BadDetuning(f64),
    #[error("ramp time {ramp:e} s longer than half the pulse {duration:e} s")]
    BadRamp { ramp: f64, duration: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Ramp {
    #[default]
    None,
    /// sin² rise and fall, each lasting `ramp_time` seconds.
    Adiabatic { ramp_time: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// F, rad/s
    pub force: Complex64,
    /// δ, rad/s
    pub delta: f64,
    /// s
    pub duration: f64,
    pub ramp: Ramp,
}

impl DriveSpec {
    pub fn new(force: Complex64, delta: f64, duration: f64) -> Self {
        DriveSpec {
            force,
            delta,
            duration,
            ramp: Ramp::None,
        }
    }

    /// `loops` full circles at detuning `delta`.
    pub fn loops(force: Complex64, delta: f64, loops: u32) -> Self {
        Self::new(force, delta, loops as f64 * 2.0 * PI / delta.abs())
    }

    pub fn with_ramp(self, ramp: Ramp) -> Self {
        DriveSpec { ramp, ..self }
    }

    /// Envelope r(t) ∈ [0, 1].
    pub fn envelope(&self, t: f64) -> f64 {
        match self.ramp {
            Ramp::None => 1.0,
            Ramp::Adiabatic { ramp_time } => {
                let edge = t.min(self.duration - t);
                if edge >= ramp_time {
                    1.0
                } else {
                    (0.5 * PI * edge.max(0.0) / ramp_time).sin().powi(2)
                }
            }
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(DynamicsError::BadDuration(self.duration));
        }
        if !(self.delta.is_finite() && self.delta != 0.0) {
            return Err(DynamicsError::BadDetuning(self.delta));
        }
        if let Ramp::Adiabatic { ramp_time } = self.ramp {
            if !(ramp_time > 0.0 && 2.0 * ramp_time <= self.duration) {
                return Err(DynamicsError::BadRamp {
                    ramp: ramp_time,
                    duration: self.duration,
                });
            }
        }
        Ok(())
    }
}

/// 2π/(1000|δ|).
pub fn default_step(delta: f64) -> f64 {
    2.0 * PI / (STEPS_PER_PERIOD * delta.abs())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub final_displacement: Complex64,
    /// rad
    pub geometric_phase: f64,
    /// Largest |α| seen at a step boundary.
    pub max_excursion: f64,
    /// (t, α) pairs when sampling was requested.
    pub samples: Vec<(f64, Complex64)>,
}

/// sign(δ)·2πn|F|²/δ² for `loops` circles.
pub fn closed_form_phase(force: Complex64, delta: f64, loops: u32) -> f64 {
    delta.signum() * 2.0 * PI * loops as f64 * force.norm_sqr() / (delta * delta)
}

fn run(d: &DriveSpec, step: f64, start: Complex64, t0: f64, stride: usize) -> Result<TrajectoryResult, DynamicsError> {
    d.validate()?;
    let limit = MAX_STEP_FRACTION * 2.0 * PI / d.delta.abs();
    if !(step > 0.0 && step <= limit) {
        return Err(DynamicsError::StepTooLarge { step, limit });
    }
    let n = ((d.duration / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = d.duration / n as f64;
    let drive = |t: f64| d.force * d.envelope(t) * Complex64::from_polar(1.0, d.delta * (t0 + t));
    let deriv = |t: f64, a: Complex64| {
        let f = drive(t);
        (Complex64::new(0.0, -1.0) * f, -(f.conj() * a).re)
    };
    let mut alpha = start;
    let mut theta = 0.0;
    let mut max_excursion = alpha.norm();
    let mut samples = Vec::new();
    if stride > 0 {
        samples.push((0.0, alpha));
    }
    for i in 0..n {
        let t = i as f64 * h;
        let (k1a, k1t) = deriv(t, alpha);
        let (k2a, k2t) = deriv(t + 0.5 * h, alpha + 0.5 * h * k1a);
        let (k3a, k3t) = deriv(t + 0.5 * h, alpha + 0.5 * h * k2a);
        let (k4a, k4t) = deriv(t + h, alpha + h * k3a);
        alpha += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
        max_excursion = max_excursion.max(alpha.norm());
        if stride > 0 && (i + 1) % stride == 0 {
            samples.push((t + h, alpha));
        }
    }
    Ok(TrajectoryResult {
        final_displacement: alpha,
        geometric_phase: theta,
        max_excursion,
        samples,
    })
}

/// Fourth-order Runge-Kutta integration from α = 0. `step` is rounded down so
/// a whole number of steps spans the pulse.
pub fn integrate_drive(d: &DriveSpec, step: f64) -> Result<TrajectoryResult, DynamicsError> {
    run(d, step, Complex64::new(0.0, 0.0), 0.0, 0)
}

/// As [`integrate_drive`], recording α every `stride` steps.
pub fn integrate_drive_sampled(d: &DriveSpec, step: f64, stride: usize) -> Result<TrajectoryResult, DynamicsError> {
    run(d, step, Complex64::new(0.0, 0.0), 0.0, stride.max(1))
}

/// Phases of the four spin configurations (↑↑, ↑↓, ↓↑, ↓↓).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EchoSimulation {
    /// After the first pulse only.
    pub single_pulse: [f64; 4],
    /// After both pulses.
    pub echo: [f64; 4],
    /// Largest |α| left at the end of the sequence.
    pub residual_displacement: f64,
}

impl EchoSimulation {
    pub fn entangling_phase(&self) -> f64 {
        self.echo[0] - self.echo[1]
    }
}

/// Two pulses of τ_g/2 with a spin flip between them. The second pulse starts
/// from the first pulse's final displacement.
pub fn simulate_echo_gate(
    f: &ForceCoefficients,
    delta: f64,
    tau_g: f64,
    ramp: Ramp,
) -> Result<EchoSimulation, DynamicsError> {
    let pulse = 0.5 * tau_g;
    let step = default_step(delta);
    let mut out = EchoSimulation::default();
    let spins = [(true, true), (true, false), (false, true), (false, false)];
    for (idx, (a, b)) in spins.into_iter().enumerate() {
        let first = DriveSpec::new(f.for_spins(a, b), delta, pulse).with_ramp(ramp);
        let r1 = run(&first, step, Complex64::new(0.0, 0.0), 0.0, 0)?;
        let second = DriveSpec::new(f.for_spins(!a, !b), delta, pulse).with_ramp(ramp);
        let r2 = run(&second, step, r1.final_displacement, pulse, 0)?;
        out.single_pulse[idx] = r1.geometric_phase;
        out.echo[idx] = r1.geometric_phase + r2.geometric_phase;
        out.residual_displacement = out.residual_displacement.max(r2.final_displacement.norm());
    }
    Ok(out)
}

/// Tolerances of the closed-form comparison.
pub const PHASE_TOLERANCE: f64 = 1e-6;
pub const CLOSURE_TOLERANCE: f64 = 1e-8;
pub const ECHO_TOLERANCE: f64 = 1e-4;

/// Worst deviations seen by [`oracle_check`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cases: usize,
    /// max |θ − θ_closed|/|θ_closed|
    pub max_phase_deviation: f64,
    /// max |α_final| / (2|F|/|δ|)
    pub max_closure_residual: f64,
    /// max | |Φ(↑↑) − Φ(↑↓)| − π/2 | over the supplied echo cases.
    pub max_echo_deviation: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.max_phase_deviation <= PHASE_TOLERANCE
            && self.max_closure_residual <= CLOSURE_TOLERANCE
            && self.max_echo_deviation <= ECHO_TOLERANCE
    }
}

/// A random closed drive: |F| in [10², 10⁵] rad/s, |δ| in [10³, 10⁶] rad/s with
/// random sign, 1 to 4 loops.
pub fn random_drive<R: Rng>(rng: &mut R) -> (DriveSpec, u32) {
    let magnitude = 10f64.powf(rng.random_range(2.0..5.0));
    let force = Complex64::from_polar(magnitude, rng.random_range(0.0..2.0 * PI));
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let delta = sign * 10f64.powf(rng.random_range(3.0..6.0));
    let loops = rng.random_range(1..=4);
    (DriveSpec::loops(force, delta, loops), loops)
}

/// Integrates `cases` seeded random drives against the closed-form phase and
/// runs each supplied gate operating point (forces, δ_k, τ_g) through the echo
/// simulation.
pub fn oracle_check(
    cases: usize,
    seed: u64,
    echo_points: &[(ForceCoefficients, f64, f64)],
) -> Result<OracleReport, DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        cases,
        ..Default::default()
    };
    for _ in 0..cases {
        let (d, loops) = random_drive(&mut rng);
        let r = integrate_drive(&d, default_step(d.delta))?;
        let expected = closed_form_phase(d.force, d.delta, loops);
        report.max_phase_deviation = report
            .max_phase_deviation
            .max((r.geometric_phase - expected).abs() / expected.abs());
        let excursion = 2.0 * d.force.norm() / d.delta.abs();
        report.max_closure_residual = report.max_closure_residual.max(r.final_displacement.norm() / excursion);
    }
    for (f, delta, tau) in echo_points {
        let sim = simulate_echo_gate(f, *delta, *tau, Ramp::None)?;
        report.max_echo_deviation = report
            .max_echo_deviation
            .max((sim.entangling_phase().abs() - 0.5 * PI).abs());
    }
    Ok(report)
}
