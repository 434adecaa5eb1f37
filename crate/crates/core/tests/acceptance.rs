//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use otdf::angular::{wigner3j_exact, wigner3j_f64};
use otdf::constants::{AMU, C, HBAR};
use otdf::dynamics::{oracle_check, CLOSURE_TOLERANCE, PHASE_TOLERANCE};
use otdf::gate::{
    evaluate_gate, force_coefficients, gate_duration, geometric_phases, max_pulse_imbalance, phase_condition,
    GateResult, GateSetup,
};
use otdf::modes::{normal_modes, two_ion_closed_form, CrystalConfig};
use otdf::scattering::{channels_from, elastic_rate, inelastic_rate, long_lived_sublevels, raman_rate};
use otdf::stark::{linear_polarization, LaserField};
use otdf::sweep::{emit_string, find_optimum, sweep, OutputFormat, RowStatus, SweepConfig};
use otdf::SpeciesData;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn species(name: &str) -> SpeciesData {
    SpeciesData::bundled(name).expect("bundled species")
}

fn setup(ion1: &str, ion2: &str) -> GateSetup {
    SweepConfig {
        ion1: ion1.into(),
        ion2: ion2.into(),
        ..Default::default()
    }
    .setup()
    .expect("default setup")
}

fn gate_at(s: &GateSetup, lambda_nm: f64) -> Result<GateResult, String> {
    match evaluate_gate(s, lambda_nm * 1e-9) {
        Ok(o) => o
            .result()
            .cloned()
            .ok_or_else(|| format!("gate impossible at {lambda_nm} nm")),
        Err(e) => Err(format!("{lambda_nm} nm: {e}")),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = oracle_check(100, 20_240_601, &[]).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        report.max_phase_deviation <= PHASE_TOLERANCE
            && report.max_closure_residual <= CLOSURE_TOLERANCE
            && secs < 10.0,
        format!(
            "max phase deviation {:.2e}, max closure residual {:.2e}, {secs:.2} s",
            report.max_phase_deviation, report.max_closure_residual
        ),
    )
}

/// Lowest mode of two ions from the mass-weighted Hessian κ[[2, −1], [−1, 2]],
/// independent of the crate's equilibrium solver: (Ω₁, Ω₂, b₀).
fn two_ion_oracle(m1: f64, m2: f64, curvature: f64) -> (f64, f64, f64) {
    let b11 = 2.0 * curvature / m1;
    let b22 = 2.0 * curvature / m2;
    let b12 = -curvature / (m1 * m2).sqrt();
    let tr = b11 + b22;
    let disc = ((b11 - b22).powi(2) + 4.0 * b12 * b12).sqrt();
    let (lo, hi) = (0.5 * (tr - disc), 0.5 * (tr + disc));
    // eigenvector (b12, lo − b11), first component made positive
    let b0 = b12.abs() / b12.hypot(lo - b11);
    (lo.sqrt(), hi.sqrt(), b0)
}

fn criterion_2() -> Outcome {
    let nu = 2.0 * PI * 2e6;
    let (w1, w2, b0) = two_ion_closed_form(1.0, nu);
    let ratio_dev = (w2 / w1 - 3f64.sqrt()).abs();
    let b0_dev = (b0 - FRAC_1_SQRT_2).abs();
    let mut worst = 0.0f64;
    for (m1, m2) in [(40.0, 40.0), (40.0, 88.0), (88.0, 138.0), (138.0, 226.0)] {
        let c = CrystalConfig::new(vec![m1 * AMU, m2 * AMU], 40.0 * AMU, nu).map_err(|e| e.to_string())?;
        let sol = normal_modes(&c).map_err(|e| e.to_string())?;
        let (c1, c2, cb) = two_ion_closed_form(m2 / m1, c.single_ion_frequency(0));
        let (o1, o2, ob) = two_ion_oracle(c.masses[0], c.masses[1], c.curvature);
        for (num, closed, oracle) in [
            (sol.frequencies[0], c1, o1),
            (sol.frequencies[1], c2, o2),
            (sol.eigenvectors[0][0], cb, ob),
        ] {
            worst = worst
                .max(((num - closed) / closed).abs())
                .max(((oracle - closed) / closed).abs());
        }
    }
    check(
        ratio_dev <= 1e-10 && b0_dev <= 1e-10 && worst <= 1e-10,
        format!(
            "|Ω₂/Ω₁ − √3| {ratio_dev:.1e}, |b₀ − 1/√2| {b0_dev:.1e}, worst numeric/closed/oracle deviation {worst:.1e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_printed = 0.0f64;
    let mut worst_echo = 0.0f64;
    for _ in 0..1000 {
        let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let eta = [
            sign(&mut rng) * 10f64.powf(rng.random_range(-3.0..-0.7)),
            sign(&mut rng) * 10f64.powf(rng.random_range(-3.0..-0.7)),
        ];
        let shifts = [
            sign(&mut rng) * 10f64.powf(rng.random_range(4.0..8.0)),
            sign(&mut rng) * 10f64.powf(rng.random_range(4.0..8.0)),
        ];
        let phases = [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)];
        let dphi = phases[1] - phases[0];
        if dphi.cos().abs() < 1e-3 {
            continue;
        }
        let (tau, delta) = gate_duration(eta[0], eta[1], dphi, shifts[0], shifts[1]).map_err(|e| e.to_string())?;
        let printed = phase_condition(eta[0], eta[1], dphi, shifts[0], shifts[1], delta);
        worst_printed = worst_printed.max((printed - 0.5 * PI).abs() / (0.5 * PI));
        // common shifts cancel from the echo analytically; left out so the check stays at rounding level
        let f = force_coefficients(eta, phases, shifts, [0.0, 0.0]);
        let echo = geometric_phases(&f, delta, 1).map_err(|e| e.to_string())?;
        // |D₊|² − |D₋|² loses digits when one ion's term dominates
        let (a, b) = ((eta[0] * shifts[0]).abs(), (eta[1] * shifts[1]).abs());
        let conditioning = (a * a + b * b) / (2.0 * a * b * dphi.cos().abs());
        let deviation = (echo.entangling_phase().abs() - 0.5 * PI).abs() / (0.5 * PI);
        worst_echo = worst_echo.max(deviation / conditioning);
        if !(tau > 0.0 && delta == 4.0 * PI / tau) {
            return Err(format!("δ ≠ 4π/τ for τ = {tau}"));
        }
    }
    check(
        worst_printed <= 8.0 * f64::EPSILON && worst_echo <= 64.0 * f64::EPSILON,
        format!(
            "worst relative deviation from π/2: printed {worst_printed:.1e}, echo phases {worst_echo:.1e} (per unit conditioning)"
        ),
    )
}

fn criterion_4() -> Outcome {
    let visible = (400.0, 700.0);
    let ca = SweepConfig::default();
    let ba = SweepConfig {
        ion1: "ba138".into(),
        ion2: "ba138".into(),
        ..Default::default()
    };
    let ca_best = find_optimum(&ca, visible).map_err(|e| e.to_string())?;
    let ca_1550 = gate_at(&ca.setup().map_err(|e| e.to_string())?, 1550.0)?;
    let ba_1550 = gate_at(&ba.setup().map_err(|e| e.to_string())?, 1550.0)?;
    let ba_best = find_optimum(&ba, visible).map_err(|e| e.to_string())?;
    let within2 = |x: f64, target: f64| x >= 0.5 * target && x <= 2.0 * target;
    let a = within2(ca_best.result.intrinsic_error, 2.4e-5);
    let b = within2(ca_1550.intrinsic_error, 1.9e-4);
    let c = ba_1550.intrinsic_error < 2e-5;
    let d = ba_best.result.tau_g < 20e-6;

    let start = Instant::now();
    let mut points = 0;
    for s in ["ca40", "sr88", "ba138", "ra226"] {
        let cfg = SweepConfig {
            ion1: s.into(),
            ion2: s.into(),
            lambda_min_nm: 300.0,
            lambda_max_nm: 1999.0,
            ..Default::default()
        };
        points = cfg.wavelengths_nm().len();
        sweep(&cfg).map_err(|e| e.to_string())?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        a && b && c && d && secs < 60.0,
        format!(
            "(a) Ca visible min {:.2e} at {:.2} nm; (b) Ca 1550 nm {:.2e}; (c) Ba 1550 nm {:.2e}; \
             (d) Ba visible τ_g {:.2} µs at {:.2} nm; 4 × {points} points in {secs:.2} s",
            ca_best.result.intrinsic_error,
            ca_best.wavelength_nm,
            ca_1550.intrinsic_error,
            ba_1550.intrinsic_error,
            ba_best.result.tau_g * 1e6,
            ba_best.wavelength_nm
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst_tau = 0.0f64;
    let mut worst_err = 0.0f64;
    for (ion1, ion2) in [("ca40", "ca40"), ("ca40", "sr88"), ("ba138", "ra226")] {
        let mut base = setup(ion1, ion2);
        base.options.include_metastable = false;
        let mut doubled = base.clone();
        doubled.beams.power *= 2.0;
        for l in [532.0, 1064.0, 1550.0] {
            let r1 = gate_at(&base, l)?;
            let r2 = gate_at(&doubled, l)?;
            worst_tau = worst_tau.max((r2.tau_g / r1.tau_g - 0.5).abs() / 0.5);
            worst_err = worst_err.max((r2.intrinsic_error / r1.intrinsic_error - 1.0).abs());
        }
    }
    check(
        worst_tau <= 1e-12 && worst_err <= 1e-12,
        format!("τ_g ratio deviation {worst_tau:.1e}, metastable-free error change {worst_err:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let eta = 0.07;
    let limit = max_pulse_imbalance(eta * eta, 1e-4).map_err(|e| e.to_string())?;
    check(
        (limit / 3e-4 - 1.0).abs() <= 0.1,
        format!("max ΔI₁₂/I = {limit:.3e} for η = {eta}, error 1e-4"),
    )
}

/// Σ sign·√(value²) over exact 3j products, grouped by square-free radicand.
#[derive(Default)]
struct RadicalSum(BTreeMap<BigInt, BigRational>);

impl RadicalSum {
    fn add(&mut self, sign: i32, square: BigRational) {
        if sign == 0 || square.is_zero() {
            return;
        }
        // √(p/q) = √(p q)/q
        let q = square.denom().clone();
        let mut n = square.numer() * &q;
        let mut outside = BigInt::one();
        let mut radicand = BigInt::one();
        let mut p = BigInt::from(2);
        while &p * &p <= n {
            let pp = &p * &p;
            while (&n % &pp).is_zero() {
                n /= &pp;
                outside *= &p;
            }
            if (&n % &p).is_zero() {
                n /= &p;
                radicand *= &p;
            }
            p += 1;
        }
        radicand *= n;
        let coeff = BigRational::new(BigInt::from(sign) * outside, q);
        *self.0.entry(radicand).or_insert_with(BigRational::zero) += coeff;
    }

    /// The sum when it is rational, `None` otherwise.
    fn rational(&self) -> Option<BigRational> {
        let mut out = BigRational::zero();
        for (r, c) in &self.0 {
            if c.is_zero() {
                continue;
            }
            if !r.is_one() {
                return None;
            }
            out += c;
        }
        Some(out)
    }
}

fn product(a: (i32, BigRational), b: (i32, BigRational)) -> (i32, BigRational) {
    (a.0 * b.0, a.1 * b.1)
}

fn ms(tj: i32) -> impl Iterator<Item = i32> {
    (-tj..=tj).step_by(2)
}

fn triangle(a: i32, b: i32, c: i32) -> bool {
    (a + b + c) % 2 == 0 && c <= a + b && c >= (a - b).abs()
}

fn criterion_7() -> Outcome {
    let max = 5;
    let mut failures = Vec::new();
    let mut symbols = 0usize;
    let mut worst_sum_rule = 0.0f64;
    let w = |j: [i32; 3], m: [i32; 3]| wigner3j_exact(j, m);
    for a in 0..=max {
        for b in 0..=max {
            for c in 0..=max {
                for ma in ms(a) {
                    for mb in ms(b) {
                        for mc in ms(c) {
                            symbols += 1;
                            let v = w([a, b, c], [ma, mb, mc]);
                            if (ma + mb + mc != 0 || !triangle(a, b, c)) && v.0 != 0 {
                                failures.push(format!("selection ({a} {b} {c}; {ma} {mb} {mc})"));
                            }
                            if ma == 0 && mb == 0 && mc == 0 && ((a + b + c) / 2) % 2 == 1 && v.0 != 0 {
                                failures.push(format!("odd-sum zero ({a} {b} {c}; 0 0 0)"));
                            }
                            let odd = if triangle(a, b, c) && ((a + b + c) / 2) % 2 == 1 {
                                -1
                            } else {
                                1
                            };
                            let flip = |x: (i32, BigRational)| (x.0 * odd, x.1);
                            let checks = [
                                (w([b, c, a], [mb, mc, ma]), v.clone()),
                                (w([c, a, b], [mc, ma, mb]), v.clone()),
                                (w([b, a, c], [mb, ma, mc]), flip(v.clone())),
                                (w([a, c, b], [ma, mc, mb]), flip(v.clone())),
                                (w([a, b, c], [-ma, -mb, -mc]), flip(v.clone())),
                            ];
                            if checks.iter().any(|(x, y)| x != y) {
                                failures.push(format!("symmetry ({a} {b} {c}; {ma} {mb} {mc})"));
                            }
                        }
                    }
                }
            }
            // Σ_{m1,m2} (2j3+1)(… j3 m3)(… j3' m3') = δ δ
            for c in 0..=max {
                for c2 in 0..=max {
                    if !triangle(a, b, c) || !triangle(a, b, c2) {
                        continue;
                    }
                    for mc in ms(c) {
                        for mc2 in ms(c2) {
                            let mut sum = RadicalSum::default();
                            for ma in ms(a) {
                                for mb in ms(b) {
                                    let (s, sq) = product(w([a, b, c], [ma, mb, mc]), w([a, b, c2], [ma, mb, mc2]));
                                    sum.add(s, sq * BigRational::from_integer(BigInt::from((c + 1) * (c + 1))));
                                }
                            }
                            let expected = if c == c2 && mc == mc2 {
                                BigRational::one()
                            } else {
                                BigRational::zero()
                            };
                            if sum.rational() != Some(expected) {
                                failures.push(format!("orthogonality over m ({a} {b}; {c} {mc}; {c2} {mc2})"));
                            }
                        }
                    }
                }
            }
            // Σ_{j3,m3} (2j3+1)(m1 m2)(m1' m2') = δ δ
            for ma in ms(a) {
                for mb in ms(b) {
                    for ma2 in ms(a) {
                        for mb2 in ms(b) {
                            let mut sum = RadicalSum::default();
                            for c in (0..=a + b).filter(|&c| triangle(a, b, c)) {
                                for mc in ms(c) {
                                    let (s, sq) = product(w([a, b, c], [ma, mb, mc]), w([a, b, c], [ma2, mb2, mc]));
                                    sum.add(s, sq * BigRational::from_integer(BigInt::from((c + 1) * (c + 1))));
                                }
                            }
                            let expected = if ma == ma2 && mb == mb2 {
                                BigRational::one()
                            } else {
                                BigRational::zero()
                            };
                            if sum.rational() != Some(expected) {
                                failures.push(format!("orthogonality over j ({a} {b}; {ma} {mb}; {ma2} {mb2})"));
                            }
                        }
                    }
                }
            }
        }
        // Σ_{q, m_k} (J_i 1 J_k; m_i q −m_k)² = 1/(2J_i+1), for every J_k reachable from J_i = a/2
        for tk in (0..=max).filter(|&tk| triangle(a, 2, tk)) {
            for mi in ms(a) {
                let mut exact = BigRational::zero();
                let mut float = 0.0;
                for q in -1..=1 {
                    for mk in ms(tk) {
                        exact += w([a, 2, tk], [mi, 2 * q, -mk]).1;
                        float += wigner3j_f64(
                            a as f64 / 2.0,
                            1.0,
                            tk as f64 / 2.0,
                            mi as f64 / 2.0,
                            q as f64,
                            -mk as f64 / 2.0,
                        )
                        .map_err(|e| e.to_string())?
                        .powi(2);
                    }
                }
                let target = 1.0 / (a as f64 + 1.0);
                worst_sum_rule = worst_sum_rule.max((float - target).abs());
                if exact != BigRational::new(BigInt::one(), BigInt::from(a + 1)) {
                    failures.push(format!("sum rule J_i = {a}/2, J_k = {tk}/2"));
                }
            }
        }
    }
    let detail = format!(
        "{symbols} symbols, {} exact failures, worst floating sum-rule deviation {worst_sum_rule:.1e}",
        failures.len()
    );
    if let Some(first) = failures.first() {
        return Err(format!("{detail}; first: {first}"));
    }
    check(worst_sum_rule <= 1e-12, detail)
}

/// Γ Ω²/(4Δ² + 2Ω² + Γ²) for S₁/₂(m = +½) driven on S₁/₂–P₁/₂ by the crate's
/// linear polarization (σ⁺ and σ⁻ at half intensity each).
fn two_level_rate(s: &SpeciesData, intensity: f64, detuning: f64) -> f64 {
    let p = s.level_index("P1/2").unwrap();
    let g = s.level_index("S1/2").unwrap();
    let d = s.level_index("D3/2").unwrap();
    let a_ps = s.einstein_a(p, g).unwrap();
    let gamma = a_ps + s.einstein_a(p, d).unwrap();
    let omega0 = s.omega(p, g);
    // |Ω|² = 6πc²I A (2J_k+1) Σ_q |ε_q|² 3j² / (ħω³), with Σ = ½ · ⅓ for m = +½
    let rabi_sq = 6.0 * PI * C * C * intensity * a_ps * 2.0 * (0.5 / 3.0) / (HBAR * omega0.powi(3));
    gamma * rabi_sq / (4.0 * detuning * detuning + 2.0 * rabi_sq + gamma * gamma)
}

fn criterion_8() -> Outcome {
    let mut negative = 0usize;
    let mut closed_nonzero = 0usize;
    let mut closed_checked = 0usize;
    let mut total = 0usize;
    for name in ["ca40", "sr88", "ba138", "ra226"] {
        let s = species(name);
        let q = s.standard_qubit();
        let subs = long_lived_sublevels(&s);
        let mut l = 250.0;
        while l < 4000.0 {
            let field = LaserField::new(l * 1e-9, 1e8, linear_polarization()).unwrap();
            let omega_l = field.omega();
            if let Ok(el) = elastic_rate(&s, &q, &field) {
                let inel = inelastic_rate(&s, &q, &field).unwrap();
                negative += usize::from(!(el >= 0.0 && inel >= 0.0));
                for &i in &subs {
                    for ch in channels_from(&s, i, &field).unwrap() {
                        total += 1;
                        negative += usize::from(ch.rate.is_nan() || ch.rate < 0.0);
                        let omega_fi = s.omega(ch.final_state.level, i.level);
                        if omega_l <= omega_fi {
                            closed_checked += 1;
                            closed_nonzero += usize::from(ch.rate != 0.0);
                            let direct = raman_rate(&s, i, ch.final_state, &field).unwrap();
                            closed_nonzero += usize::from(direct != 0.0);
                        }
                    }
                }
            }
            l *= 1.013;
        }
    }
    let ca = species("ca40");
    let s_up = ca.sublevel("S1/2", 1).unwrap();
    let p = ca.level_index("P1/2").unwrap();
    let g = ca.level_index("S1/2").unwrap();
    let intensity = 1e3;
    let mut worst = 0.0f64;
    // just outside the 10 GHz resonance guard, on both sides
    for detuning in [-2.0 * PI * 10.001e9, 2.0 * PI * 10.001e9] {
        let omega_l = ca.omega(p, g) + detuning;
        let field = LaserField::new(2.0 * PI * C / omega_l, intensity, linear_polarization()).unwrap();
        let full: f64 = channels_from(&ca, s_up, &field).unwrap().iter().map(|c| c.rate).sum();
        let oracle = two_level_rate(&ca, intensity, detuning);
        worst = worst.max((full / oracle - 1.0).abs());
    }
    check(
        negative == 0 && closed_nonzero == 0 && closed_checked > 0 && worst <= 0.2,
        format!(
            "{total} channels, {negative} negative, {closed_checked} closed channels with {closed_nonzero} nonzero, \
             two-level deviation {:.2e}",
            worst
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut outputs = Vec::new();
    for threads in [1, 8, 1, 8] {
        let cfg = SweepConfig {
            ion1: "ca40".into(),
            ion2: "sr88".into(),
            lambda_step_nm: 2.0,
            threads,
            ..Default::default()
        };
        let rows = sweep(&cfg).map_err(|e| e.to_string())?;
        outputs.push((
            emit_string(&rows, OutputFormat::Csv).map_err(|e| e.to_string())?,
            emit_string(&rows, OutputFormat::Json).map_err(|e| e.to_string())?,
        ));
    }
    let same = outputs.iter().all(|o| o == &outputs[0]);
    let skipped = outputs[0].0.matches(RowStatus::NearResonanceSkipped.as_str()).count();
    check(
        same,
        format!(
            "{} runs at 1 and 8 threads, CSV {} bytes, JSON {} bytes, {skipped} guarded rows",
            outputs.len(),
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", criterion_1),
        ("equal-mass mode limit", criterion_2),
        ("phase-condition identity", criterion_3),
        ("reference numbers and sweep runtime", criterion_4),
        ("intensity scaling", criterion_5),
        ("pulse-imbalance requirement", criterion_6),
        ("angular algebra", criterion_7),
        ("scattering sanity", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
