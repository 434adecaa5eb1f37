//! `otdf`: wavelength sweeps, point evaluations, magic-wavelength and
//! optimum searches, mode reports and the dynamics self-check.
//!
//! Exit codes: 0 success, 1 configuration error, 2 atomic-data error,
//! 3 numeric failure.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otdf::dynamics::{oracle_check, OracleReport};
use otdf::gate::{evaluate_gate, GateError, GateOutcome};
use otdf::modes::equilibrium_spacing;
use otdf::species::{load_species, SpeciesError};
use otdf::stark::{find_magic_wavelengths, LaserField, StarkError};
use otdf::sweep::{emit, find_optimum_with, sweep_with, OutputFormat, SweepConfig, SweepError};

#[derive(Parser)]
#[command(name = "otdf", version, about = "Optical-transition dipole-force gate calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the gate on a wavelength grid.
    Sweep(Common),
    /// Evaluate the gate at one wavelength and print the full budget as JSON.
    Point {
        #[command(flatten)]
        common: Common,
        /// Wavelength, nm.
        #[arg(long)]
        lambda: f64,
    },
    /// List wavelengths where each ion's differential Stark shift vanishes.
    Magic(Common),
    /// Print the axial normal modes of the ion pair.
    Modes(Common),
    /// Find the wavelength of minimum intrinsic error in the range.
    Optimum(Common),
    /// Compare numerically integrated trajectories with the closed-form phases.
    OracleCheck {
        /// Number of random drives.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Species data utilities.
    Species {
        #[command(subcommand)]
        action: SpeciesAction,
    },
}

#[derive(Subcommand)]
enum SpeciesAction {
    /// Load and validate species JSON files.
    Validate { paths: Vec<PathBuf> },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Flags shared by the gate subcommands. Any flag given overrides the config file.
#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled species name (ca40, sr88, ba138, ra226) or species JSON path.
    #[arg(long)]
    ion1: Option<String>,
    #[arg(long)]
    ion2: Option<String>,
    /// nm
    #[arg(long)]
    lambda_min: Option<f64>,
    /// nm
    #[arg(long)]
    lambda_max: Option<f64>,
    /// nm
    #[arg(long)]
    lambda_step: Option<f64>,
    /// mW per beam
    #[arg(long)]
    power: Option<f64>,
    /// µm
    #[arg(long)]
    waist: Option<f64>,
    /// Beam angle to the trap axis, degrees.
    #[arg(long)]
    beam_angle: Option<f64>,
    /// Axial frequency of a single ⁴⁰Ca⁺ ion, MHz.
    #[arg(long)]
    axial_freq_ref: Option<f64>,
    /// Resonance skip half-width, nm.
    #[arg(long)]
    guard: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<SpeciesError> for Failure {
    fn from(e: SpeciesError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<GateError> for Failure {
    fn from(e: GateError) -> Self {
        match e {
            GateError::BadBeam { .. } | GateError::BadMode(_) => Failure::Config(e.to_string()),
            GateError::Stark {
                source: StarkError::WavelengthOutOfRange(_) | StarkError::BadIntensity(_),
                ..
            } => Failure::Config(e.to_string()),
            GateError::Stark {
                source: StarkError::Angular(_),
                ..
            } => Failure::Data(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(_) | SweepError::Io(_) | SweepError::Json(_) | SweepError::Csv(_) => {
                Failure::Config(e.to_string())
            }
            SweepError::Species(s) => s.into(),
            SweepError::Gate(g) => g.into(),
            SweepError::NoValidPoint(..) | SweepError::Malformed(_) => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_config(common: &Common) -> Result<SweepConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("config {}: {e}", path.display())))?
        }
        None => SweepConfig::default(),
    };
    if let Some(v) = &common.ion1 {
        cfg.ion1 = v.clone();
    }
    if let Some(v) = &common.ion2 {
        cfg.ion2 = v.clone();
    }
    let overrides = [
        (common.lambda_min, &mut cfg.lambda_min_nm),
        (common.lambda_max, &mut cfg.lambda_max_nm),
        (common.lambda_step, &mut cfg.lambda_step_nm),
        (common.power, &mut cfg.power_mw),
        (common.waist, &mut cfg.waist_um),
        (common.beam_angle, &mut cfg.beam_angle_deg),
        (common.axial_freq_ref, &mut cfg.axial_freq_ref_mhz),
        (common.guard, &mut cfg.guard_nm),
    ];
    for (flag, field) in overrides {
        if let Some(v) = flag {
            *field = v;
        }
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(f) = common.format {
        cfg.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(common: &Common) -> Result<Box<dyn Write>, Failure> {
    Ok(match &common.out {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                Failure::Config(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_sweep(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let setup = cfg.setup()?;
    let rows = sweep_with(&cfg, &setup)?;
    let mut out = output(common)?;
    emit(&rows, cfg.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_point(common: &Common, lambda: f64) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let setup = cfg.setup()?;
    let outcome = evaluate_gate(&setup, lambda * 1e-9)?;
    let mut out = output(common)?;
    serde_json::to_writer_pretty(&mut out, &outcome)?;
    writeln!(out)?;
    out.flush()?;
    if let GateOutcome::Impossible { reason, .. } = &outcome {
        return Err(Failure::Numeric(reason.clone()));
    }
    Ok(())
}

fn run_magic(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let setup = cfg.setup()?;
    let mut out = output(common)?;
    let (lo, hi) = (cfg.lambda_min_nm * 1e-9, cfg.lambda_max_nm * 1e-9);
    let mut report = Vec::new();
    for (j, ion) in setup.ions.iter().enumerate() {
        if j == 1 && cfg.ion1 == cfg.ion2 && cfg.qubit1 == cfg.qubit2 {
            break;
        }
        let template = LaserField::new(lo, setup.beams.peak_intensity(), setup.polarization)
            .map_err(|e| Failure::Config(e.to_string()))?;
        let roots = find_magic_wavelengths(ion, &setup.qubits[j], &template, lo, hi);
        report.push(serde_json::json!({
            "ion": ion.name,
            "magic_wavelengths_nm": roots.iter().map(|l| l * 1e9).collect::<Vec<_>>(),
        }));
    }
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_modes(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let setup = cfg.setup()?;
    let m = &setup.modes;
    let mut out = output(common)?;
    writeln!(out, "ions: {} {}", setup.ions[0].name, setup.ions[1].name)?;
    writeln!(out, "spacing_um: {:.6}", equilibrium_spacing(&setup.crystal) * 1e6)?;
    for (k, (w, b)) in m.frequencies.iter().zip(&m.eigenvectors).enumerate() {
        let vec: Vec<String> = b.iter().map(|v| format!("{v:+.9}")).collect();
        writeln!(
            out,
            "mode {k}: {:.9} MHz  b = [{}]",
            w / (2.0 * PI * 1e6),
            vec.join(", ")
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run_optimum(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let setup = cfg.setup()?;
    let opt = find_optimum_with(&cfg, &setup, (cfg.lambda_min_nm, cfg.lambda_max_nm))?;
    let mut out = output(common)?;
    serde_json::to_writer_pretty(&mut out, &opt)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_oracle(cases: usize, seed: u64) -> Result<(), Failure> {
    let cfg = SweepConfig {
        ion1: "ca40".into(),
        ion2: "sr88".into(),
        ..SweepConfig::default()
    };
    let setup = cfg.setup()?;
    let mut points = Vec::new();
    for lambda in [532e-9, 1064e-9] {
        if let GateOutcome::Ok(r) = evaluate_gate(&setup, lambda)? {
            points.push((r.forces, r.delta_k, r.tau_g));
        }
    }
    let report: OracleReport = oracle_check(cases, seed, &points).map_err(|e| Failure::Numeric(e.to_string()))?;
    println!("cases: {}", report.cases);
    println!("max phase deviation (relative): {:.3e}", report.max_phase_deviation);
    println!(
        "max closure residual (of max excursion): {:.3e}",
        report.max_closure_residual
    );
    println!("max echo phase deviation from pi/2: {:.3e}", report.max_echo_deviation);
    if report.passed() {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Numeric("oracle check failed".into()))
    }
}

fn run_species_validate(paths: &[PathBuf]) -> Result<(), Failure> {
    if paths.is_empty() {
        return Err(Failure::Config("no species files given".into()));
    }
    let mut failed = None;
    for p in paths {
        match load_species(p) {
            Ok(s) => println!("{}: ok ({})", p.display(), s.name),
            Err(e) => {
                println!("{}: {e}", p.display());
                failed = Some(e);
            }
        }
    }
    match failed {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep(c) => run_sweep(&c),
        Command::Point { common, lambda } => run_point(&common, lambda),
        Command::Magic(c) => run_magic(&c),
        Command::Modes(c) => run_modes(&c),
        Command::Optimum(c) => run_optimum(&c),
        Command::OracleCheck { cases, seed } => run_oracle(cases, seed),
        Command::Species {
            action: SpeciesAction::Validate { paths },
        } => run_species_validate(&paths),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
