use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use otdf::gate::{evaluate_gate, geometric_phases, phase_condition, GateOutcome, GateResult, GateSetup, SpacingModel};
use otdf::stark::{find_magic_wavelengths, LaserField};
use otdf::sweep::{evaluate_point, RowStatus};
use otdf::SpeciesData;

fn setup(a: &str, b: &str) -> GateSetup {
    GateSetup::standard(SpeciesData::bundled(a).unwrap(), SpeciesData::bundled(b).unwrap()).unwrap()
}

fn gate(s: &GateSetup, lambda_nm: f64) -> GateResult {
    evaluate_gate(s, lambda_nm * 1e-9).unwrap().result().unwrap().clone()
}

#[test]
fn calcium_strontium_532_nm() {
    let r = gate(&setup("ca40", "sr88"), 532.0);
    let f = r.forces;
    // regression pin
    assert_relative_eq!(r.tau_g, CA_SR_532_TAU, max_relative = 1e-9);
    assert_relative_eq!(f.delta_plus.norm(), CA_SR_532_DELTA_PLUS, max_relative = 1e-9);
    assert_relative_eq!(f.delta_minus.norm(), CA_SR_532_DELTA_MINUS, max_relative = 1e-9);
    assert_relative_eq!(f.sigma_plus.norm(), CA_SR_532_SIGMA_PLUS, max_relative = 1e-9);
    let p = geometric_phases(&f, r.delta_k, r.loops).unwrap();
    assert_relative_eq!(p.entangling_phase().abs(), PI / 2.0, max_relative = 1e-9);
}

const CA_SR_532_TAU: f64 = 1.4890713690e-5;
const CA_SR_532_DELTA_PLUS: f64 = 3.1040829087e5;
const CA_SR_532_DELTA_MINUS: f64 = 8.5621415418e4;
const CA_SR_532_SIGMA_PLUS: f64 = 2.6856884698e5;

#[test]
fn swapping_ion_labels_changes_nothing_physical() {
    for (a, b) in [("ca40", "sr88"), ("ba138", "ca40"), ("sr88", "ra226")] {
        let (ab, ba) = (setup(a, b), setup(b, a));
        for lambda in [450.0, 532.0, 1064.0, 1550.0] {
            let (x, y) = (gate(&ab, lambda), gate(&ba, lambda));
            assert_relative_eq!(x.tau_g, y.tau_g, max_relative = 1e-9);
            assert_relative_eq!(x.intrinsic_error, y.intrinsic_error, max_relative = 1e-9);
            let (px, py) = (
                geometric_phases(&x.forces, x.delta_k, 1).unwrap(),
                geometric_phases(&y.forces, y.delta_k, 1).unwrap(),
            );
            assert_relative_eq!(px.entangling_phase(), py.entangling_phase(), max_relative = 1e-9);
        }
    }
}

#[test]
fn optimal_spacing_bounds_equilibrium_spacing() {
    let opt = setup("ca40", "sr88");
    let mut eq = opt.clone();
    eq.options.spacing = SpacingModel::Equilibrium;
    for lambda in [420.0, 532.0, 700.0, 1064.0, 1550.0, 1900.0] {
        let a = gate(&opt, lambda);
        let Some(b) = evaluate_gate(&eq, lambda * 1e-9).unwrap().result().cloned() else {
            continue;
        };
        let phases = eq.lattice_phases(lambda * 1e-9);
        let c = (phases[1] - phases[0]).cos().abs();
        assert!(b.intrinsic_error >= a.intrinsic_error);
        assert_relative_eq!(b.tau_g / a.tau_g, c.powf(-0.5), max_relative = 1e-9);
    }
}

#[test]
fn equal_species_spectator_closure() {
    for name in ["ca40", "sr88", "ba138", "ra226"] {
        let s = setup(name, name);
        for lambda in [532.0, 1064.0, 1550.0] {
            let r = gate(&s, lambda);
            let sc = r.spectator;
            assert!(!sc.warning, "{name} {lambda}");
            assert!((1..=8).contains(&sc.loops));
            assert!(sc.tau_g <= 2.0 * r.tau_g);
            let pulse = 0.5 * sc.tau_g;
            // gate mode makes `loops` circles per pulse
            assert_relative_eq!(sc.delta_k * pulse / (2.0 * PI), sc.loops as f64, max_relative = 1e-12);
            // the spectator, detuned by δ − (Ω_s − Ω_g), closes too
            let split = s.modes.frequencies[1 - r.gate_mode] - s.modes.frequencies[r.gate_mode];
            let cycles = (sc.delta_k + split) * pulse / (2.0 * PI);
            assert!((cycles - cycles.round()).abs() < 1e-6, "{cycles}");
            // shifts scale with intensity; phase ∝ n·Δ₁Δ₂/δ², so the rescaled point keeps π/2
            let f = sc.intensity_factor;
            let (d1, d2) = (r.shifts[0].differential * f, r.shifts[1].differential * f);
            let phase = phase_condition(r.eta[0], r.eta[1], 0.0, d1, d2, sc.delta_k) * sc.loops as f64;
            assert_relative_eq!(phase, PI / 2.0, max_relative = 1e-12);
        }
    }
}

#[test]
fn magic_wavelength_is_reported_not_fatal() {
    let s = setup("ca40", "ca40");
    let template = LaserField::new(800e-9, 1e8, s.polarization).unwrap();
    let roots = find_magic_wavelengths(&s.ions[0], &s.qubits[0], &template, 380e-9, 2000e-9);
    assert!(!roots.is_empty());
    for l in roots {
        assert!(matches!(evaluate_gate(&s, l).unwrap(), GateOutcome::Impossible { .. }));
        assert_eq!(evaluate_point(&s, l * 1e9).unwrap(), (RowStatus::MagicSkipped, None));
    }
}

#[test]
fn outcome_serializes_with_status_tag() {
    let s = setup("ca40", "ca40");
    let ok = serde_json::to_value(evaluate_gate(&s, 1550e-9).unwrap()).unwrap();
    assert_eq!(ok["status"], "ok");
    let bad = serde_json::to_value(GateOutcome::Impossible {
        wavelength: 1e-6,
        reason: "x".into(),
    })
    .unwrap();
    assert_eq!(bad["status"], "impossible");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scattering_error_independent_of_power(lambda in 420.0f64..1990.0, k in 0.2f64..5.0, pair in 0usize..4) {
        let (a, b) = [("ca40", "ca40"), ("ca40", "sr88"), ("ba138", "ba138"), ("sr88", "ra226")][pair];
        let base = setup(a, b);
        let mut scaled = base.clone();
        scaled.beams.power *= k;
        let (Ok(GateOutcome::Ok(x)), Ok(GateOutcome::Ok(y))) =
            (evaluate_gate(&base, lambda * 1e-9), evaluate_gate(&scaled, lambda * 1e-9)) else {
            return Ok(());
        };
        prop_assert!((y.scattering_error / x.scattering_error - 1.0).abs() < 1e-12);
        prop_assert!((y.tau_g * k / x.tau_g - 1.0).abs() < 1e-12);
    }
}
