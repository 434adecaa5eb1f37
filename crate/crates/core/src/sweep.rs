//! Wavelength sweeps, optimum search and CSV/JSON output.
//!
//! Config values use laboratory units (nm, mW, µm, degrees, MHz). Numeric row
//! values are rounded to nine significant digits when computed so that CSV and
//! JSON carry identical numbers.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate::{
    evaluate_gate, BeamGeometry, GateError, GateOptions, GateOutcome, GateResult, GateSetup, IntensityProfile,
    SpacingModel, TrapReference,
};
use crate::species::{QubitLabels, SpeciesData, SpeciesError};
use crate::stark::{dipole_resonances, StarkError};

/// Golden-section refinement stops below this bracket width, nm.
pub const OPTIMUM_TOLERANCE_NM: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error("every wavelength in [{0} nm, {1} nm] is guarded or impossible")]
    NoValidPoint(f64, f64),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed row: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Bundled species name or path to a species JSON file.
    pub ion1: String,
    pub ion2: String,
    pub qubit1: QubitLabels,
    pub qubit2: QubitLabels,
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub lambda_step_nm: f64,
    /// Per beam.
    pub power_mw: f64,
    pub waist_um: f64,
    pub beam_angle_deg: f64,
    /// Single-⁴⁰Ca⁺ axial frequency fixing the trap curvature.
    pub axial_freq_ref_mhz: f64,
    /// Half-width of the skip band around each dipole resonance.
    pub guard_nm: f64,
    pub spacing: SpacingModel,
    pub profile: IntensityProfile,
    pub include_metastable: bool,
    pub format: OutputFormat,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            ion1: "ca40".into(),
            ion2: "ca40".into(),
            qubit1: QubitLabels::default(),
            qubit2: QubitLabels::default(),
            lambda_min_nm: 300.0,
            lambda_max_nm: 2000.0,
            lambda_step_nm: 1.0,
            power_mw: 100.0,
            waist_um: 10.0,
            beam_angle_deg: 45.0,
            axial_freq_ref_mhz: 2.0,
            guard_nm: 0.5,
            spacing: SpacingModel::Optimal,
            profile: IntensityProfile::Peak,
            include_metastable: true,
            format: OutputFormat::Csv,
            threads: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let positive = [
            ("lambda_min_nm", self.lambda_min_nm),
            ("lambda_step_nm", self.lambda_step_nm),
            ("power_mw", self.power_mw),
            ("waist_um", self.waist_um),
            ("axial_freq_ref_mhz", self.axial_freq_ref_mhz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SweepError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda_max_nm.is_finite() && self.lambda_max_nm >= self.lambda_min_nm) {
            return Err(SweepError::Config(format!(
                "lambda_max_nm ({}) must not be below lambda_min_nm ({})",
                self.lambda_max_nm, self.lambda_min_nm
            )));
        }
        if !(self.guard_nm.is_finite() && self.guard_nm >= 0.0) {
            return Err(SweepError::Config(format!(
                "guard_nm must be >= 0, got {}",
                self.guard_nm
            )));
        }
        if !(self.beam_angle_deg.is_finite() && self.beam_angle_deg.abs() < 90.0) {
            return Err(SweepError::Config(format!(
                "beam_angle_deg must lie in (-90, 90), got {}",
                self.beam_angle_deg
            )));
        }
        Ok(())
    }

    /// λ_min + i·step for every i keeping λ ≤ λ_max, nm.
    pub fn wavelengths_nm(&self) -> Vec<f64> {
        let n = ((self.lambda_max_nm - self.lambda_min_nm) / self.lambda_step_nm + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.lambda_min_nm + i as f64 * self.lambda_step_nm)
            .collect()
    }

    pub fn beams(&self) -> BeamGeometry {
        BeamGeometry {
            power: self.power_mw * 1e-3,
            waist: self.waist_um * 1e-6,
            beam_angle: self.beam_angle_deg.to_radians(),
            ..BeamGeometry::default()
        }
    }

    pub fn trap(&self) -> TrapReference {
        TrapReference {
            axial_frequency: 2.0 * PI * self.axial_freq_ref_mhz * 1e6,
            ..TrapReference::default()
        }
    }

    pub fn setup(&self) -> Result<GateSetup, SweepError> {
        self.validate()?;
        let s1 = SpeciesData::resolve(&self.ion1)?;
        let s2 = SpeciesData::resolve(&self.ion2)?;
        let qubits = [s1.qubit(&self.qubit1)?, s2.qubit(&self.qubit2)?];
        let options = GateOptions {
            spacing: self.spacing,
            profile: self.profile,
            include_metastable: self.include_metastable,
            ..GateOptions::default()
        };
        Ok(GateSetup::new([s1, s2], qubits, self.beams(), self.trap(), options)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    NearResonanceSkipped,
    MagicSkipped,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::NearResonanceSkipped => "near-resonance-skipped",
            RowStatus::MagicSkipped => "magic-skipped",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(RowStatus::Ok),
            "near-resonance-skipped" => Some(RowStatus::NearResonanceSkipped),
            "magic-skipped" => Some(RowStatus::MagicSkipped),
            _ => None,
        }
    }
}

/// One sweep point. Numeric fields are `None` exactly when status is not ok.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub wavelength_nm: f64,
    pub status: RowStatus,
    /// Δ₀,Δ/2π at ion 1, Hz.
    pub stark_diff_ion1_hz: Option<f64>,
    pub stark_diff_ion2_hz: Option<f64>,
    /// s⁻¹
    pub gamma_el_ion1: Option<f64>,
    pub gamma_in_ion1: Option<f64>,
    pub gamma_el_ion2: Option<f64>,
    pub gamma_in_ion2: Option<f64>,
    /// s
    pub tau_g: Option<f64>,
    pub intrinsic_error: Option<f64>,
    pub scattering_error: Option<f64>,
}

pub const CSV_HEADER: [&str; 11] = [
    "wavelength_nm",
    "status",
    "stark_diff_ion1_hz",
    "stark_diff_ion2_hz",
    "gamma_el_ion1",
    "gamma_in_ion1",
    "gamma_el_ion2",
    "gamma_in_ion2",
    "tau_g",
    "intrinsic_error",
    "scattering_error",
];

pub const CSV_UNITS: [&str; 11] = ["nm", "", "Hz", "Hz", "1/s", "1/s", "1/s", "1/s", "s", "1", "1"];

fn sig9(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn fmt9(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.8e}")).unwrap_or_default()
}

impl SweepRow {
    fn skipped(wavelength_nm: f64, status: RowStatus) -> Self {
        SweepRow {
            wavelength_nm: sig9(wavelength_nm),
            status,
            stark_diff_ion1_hz: None,
            stark_diff_ion2_hz: None,
            gamma_el_ion1: None,
            gamma_in_ion1: None,
            gamma_el_ion2: None,
            gamma_in_ion2: None,
            tau_g: None,
            intrinsic_error: None,
            scattering_error: None,
        }
    }

    fn from_result(wavelength_nm: f64, r: &GateResult) -> Self {
        let v = |x: f64| Some(sig9(x));
        SweepRow {
            wavelength_nm: sig9(wavelength_nm),
            status: RowStatus::Ok,
            stark_diff_ion1_hz: v(r.shifts[0].differential / (2.0 * PI)),
            stark_diff_ion2_hz: v(r.shifts[1].differential / (2.0 * PI)),
            gamma_el_ion1: v(r.budget.ions[0].elastic),
            gamma_in_ion1: v(r.budget.ions[0].inelastic),
            gamma_el_ion2: v(r.budget.ions[1].elastic),
            gamma_in_ion2: v(r.budget.ions[1].inelastic),
            tau_g: v(r.tau_g),
            intrinsic_error: v(r.intrinsic_error),
            scattering_error: v(r.scattering_error),
        }
    }

    fn numeric(&self) -> [Option<f64>; 9] {
        [
            self.stark_diff_ion1_hz,
            self.stark_diff_ion2_hz,
            self.gamma_el_ion1,
            self.gamma_in_ion1,
            self.gamma_el_ion2,
            self.gamma_in_ion2,
            self.tau_g,
            self.intrinsic_error,
            self.scattering_error,
        ]
    }

    fn csv_record(&self) -> Vec<String> {
        let mut rec = vec![format!("{:.8e}", self.wavelength_nm), self.status.as_str().to_string()];
        rec.extend(self.numeric().into_iter().map(fmt9));
        rec
    }
}

/// Dipole resonance wavelengths of both ions, nm, ascending.
pub fn resonances_nm(setup: &GateSetup) -> Vec<f64> {
    let mut out: Vec<f64> = setup
        .ions
        .iter()
        .flat_map(|s| dipole_resonances(s).into_iter().map(|l| l * 1e9))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn guarded(resonances: &[f64], lambda_nm: f64, guard_nm: f64) -> bool {
    resonances.iter().any(|r| (lambda_nm - r).abs() <= guard_nm)
}

/// Full gate evaluation at one wavelength, mapping guard violations and
/// magic wavelengths to `None` with the matching status.
pub fn evaluate_point(setup: &GateSetup, lambda_nm: f64) -> Result<(RowStatus, Option<GateResult>), SweepError> {
    match evaluate_gate(setup, lambda_nm * 1e-9) {
        Ok(GateOutcome::Ok(r)) => Ok((RowStatus::Ok, Some(*r))),
        Ok(GateOutcome::Impossible { .. }) => Ok((RowStatus::MagicSkipped, None)),
        Err(GateError::Stark {
            source: StarkError::NearDipoleResonance { .. } | StarkError::NearQuadrupoleResonance { .. },
            ..
        }) => Ok((RowStatus::NearResonanceSkipped, None)),
        Err(e) => Err(e.into()),
    }
}

fn row_at(setup: &GateSetup, resonances: &[f64], guard_nm: f64, lambda_nm: f64) -> Result<SweepRow, SweepError> {
    if guarded(resonances, lambda_nm, guard_nm) {
        return Ok(SweepRow::skipped(lambda_nm, RowStatus::NearResonanceSkipped));
    }
    Ok(match evaluate_point(setup, lambda_nm)? {
        (RowStatus::Ok, Some(r)) => SweepRow::from_result(lambda_nm, &r),
        (status, _) => SweepRow::skipped(lambda_nm, status),
    })
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SweepError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// One row per grid wavelength, in ascending order.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    let setup = cfg.setup()?;
    sweep_with(cfg, &setup)
}

/// As [`sweep`] with a prepared setup.
pub fn sweep_with(cfg: &SweepConfig, setup: &GateSetup) -> Result<Vec<SweepRow>, SweepError> {
    cfg.validate()?;
    let resonances = resonances_nm(setup);
    let grid = cfg.wavelengths_nm();
    with_pool(cfg.threads, || {
        grid.par_iter()
            .map(|&l| row_at(setup, &resonances, cfg.guard_nm, l))
            .collect::<Result<Vec<_>, _>>()
    })?
}

/// Optimum found by [`find_optimum`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub wavelength_nm: f64,
    pub result: GateResult,
    /// Best error among the coarse grid points.
    pub coarse_error: f64,
}

/// Minimizes the intrinsic error over `band` (nm): a coarse scan at the config
/// step, then golden-section refinement around the best grid point.
pub fn find_optimum(cfg: &SweepConfig, band: (f64, f64)) -> Result<Optimum, SweepError> {
    let setup = cfg.setup()?;
    find_optimum_with(cfg, &setup, band)
}

pub fn find_optimum_with(cfg: &SweepConfig, setup: &GateSetup, band: (f64, f64)) -> Result<Optimum, SweepError> {
    let (lo, hi) = band;
    if !(lo.is_finite() && hi.is_finite() && hi >= lo && lo > 0.0) {
        return Err(SweepError::Config(format!("bad band [{lo}, {hi}] nm")));
    }
    let resonances = resonances_nm(setup);
    let sub = SweepConfig {
        lambda_min_nm: lo,
        lambda_max_nm: hi,
        ..cfg.clone()
    };
    let grid = sub.wavelengths_nm();
    let coarse: Vec<(f64, Option<GateResult>)> = with_pool(cfg.threads, || {
        grid.par_iter()
            .map(|&l| {
                if guarded(&resonances, l, cfg.guard_nm) {
                    return Ok((l, None));
                }
                Ok((l, evaluate_point(setup, l)?.1))
            })
            .collect::<Result<Vec<_>, SweepError>>()
    })??;
    let (best_l, best) = coarse
        .into_iter()
        .filter_map(|(l, r)| r.map(|r| (l, r)))
        .min_by(|a, b| a.1.intrinsic_error.total_cmp(&b.1.intrinsic_error))
        .ok_or(SweepError::NoValidPoint(lo, hi))?;

    let objective = |l: f64| -> f64 {
        if guarded(&resonances, l, cfg.guard_nm) {
            return f64::INFINITY;
        }
        match evaluate_point(setup, l) {
            Ok((_, Some(r))) => r.intrinsic_error,
            _ => f64::INFINITY,
        }
    };
    let (mut a, mut b) = (
        (best_l - cfg.lambda_step_nm).max(lo),
        (best_l + cfg.lambda_step_nm).min(hi),
    );
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > OPTIMUM_TOLERANCE_NM {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let refined_l = 0.5 * (a + b);
    let coarse_error = best.intrinsic_error;
    let refined = match evaluate_point(setup, refined_l) {
        Ok((_, Some(r))) if r.intrinsic_error <= coarse_error && !guarded(&resonances, refined_l, cfg.guard_nm) => {
            Some(r)
        }
        _ => None,
    };
    Ok(match refined {
        Some(r) => Optimum {
            wavelength_nm: refined_l,
            result: r,
            coarse_error,
        },
        None => Optimum {
            wavelength_nm: best_l,
            result: best,
            coarse_error,
        },
    })
}

/// Writes rows as CSV (header, units row, records) or a JSON array.
pub fn emit<W: Write>(rows: &[SweepRow], format: OutputFormat, out: W) -> Result<(), SweepError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
            w.write_record(CSV_HEADER)?;
            w.write_record(CSV_UNITS)?;
            for r in rows {
                w.write_record(r.csv_record())?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn emit_string(rows: &[SweepRow], format: OutputFormat) -> Result<String, SweepError> {
    let mut buf = Vec::new();
    emit(rows, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("emitted output is UTF-8"))
}

/// Parses output written by [`emit`] in CSV form.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, SweepError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(SweepError::Malformed(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if i == 0 {
            continue;
        }
        let num = |k: usize| -> Result<Option<f64>, SweepError> {
            let field = &rec[k];
            if field.is_empty() {
                Ok(None)
            } else {
                field
                    .parse()
                    .map(Some)
                    .map_err(|_| SweepError::Malformed(format!("bad number {field:?}")))
            }
        };
        let status =
            RowStatus::parse(&rec[1]).ok_or_else(|| SweepError::Malformed(format!("bad status {:?}", &rec[1])))?;
        rows.push(SweepRow {
            wavelength_nm: num(0)?.ok_or_else(|| SweepError::Malformed("missing wavelength".into()))?,
            status,
            stark_diff_ion1_hz: num(2)?,
            stark_diff_ion2_hz: num(3)?,
            gamma_el_ion1: num(4)?,
            gamma_in_ion1: num(5)?,
            gamma_el_ion2: num(6)?,
            gamma_in_ion2: num(7)?,
            tau_g: num(8)?,
            intrinsic_error: num(9)?,
            scattering_error: num(10)?,
        });
    }
    Ok(rows)
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<SweepRow>, SweepError> {
    Ok(serde_json::from_reader(input)?)
}
