use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use otdf::scattering::{
    channels_from, elastic_rate, inelastic_rate, ion_decoherence, long_lived_sublevels, metastable_rate, raman_rate,
};
use otdf::stark::{linear_polarization, LaserField};
use otdf::SpeciesData;

const SPECIES: [&str; 4] = ["ca40", "sr88", "ba138", "ra226"];

fn field(lambda_nm: f64, intensity: f64) -> LaserField {
    LaserField::new(lambda_nm * 1e-9, intensity, linear_polarization()).unwrap()
}

#[test]
fn inelastic_is_half_the_pairwise_raman_sum() {
    for name in SPECIES {
        let s = SpeciesData::bundled(name).unwrap();
        let q = s.standard_qubit();
        let finals = long_lived_sublevels(&s);
        for lambda in [355.0, 532.0, 1064.0, 1550.0] {
            let f = field(lambda, 6e8);
            let mut sum = 0.0;
            for i in [q.up, q.down] {
                for &fin in finals.iter().filter(|&&x| x != i) {
                    sum += raman_rate(&s, i, fin, &f).unwrap();
                }
            }
            assert_relative_eq!(inelastic_rate(&s, &q, &f).unwrap(), 0.5 * sum, max_relative = 1e-12);
            for i in [q.up, q.down] {
                for ch in channels_from(&s, i, &f).unwrap() {
                    let direct = raman_rate(&s, i, ch.final_state, &f).unwrap();
                    assert_relative_eq!(ch.rate, direct, max_relative = 1e-12, epsilon = 1e-300);
                }
            }
        }
    }
}

#[test]
fn raman_from_up_grows_towards_resonance() {
    let s = SpeciesData::bundled("ca40").unwrap();
    let q = s.standard_qubit();
    // D5/2–P3/2 line at 854.2 nm approached from the blue
    let mut last = 0.0;
    for lambda in [700.0, 760.0, 800.0, 830.0, 845.0, 850.0, 853.0, 854.0] {
        let total: f64 = channels_from(&s, q.up, &field(lambda, 1e8))
            .unwrap()
            .iter()
            .filter(|c| c.final_state != q.up)
            .map(|c| c.rate)
            .sum();
        assert!(total > last, "{lambda} nm: {total} <= {last}");
        last = total;
    }
}

#[test]
fn barium_metastable_slower_than_calcium() {
    let ca = SpeciesData::bundled("ca40").unwrap();
    let ba = SpeciesData::bundled("ba138").unwrap();
    let (rc, rb) = (
        metastable_rate(&ca, &ca.standard_qubit()),
        metastable_rate(&ba, &ba.standard_qubit()),
    );
    assert!(rb < rc && rb > 0.0);
    assert_relative_eq!(rc, 0.5 * 0.8562, max_relative = 1e-12);
}

#[test]
fn calcium_rates_at_1550_nm() {
    // regression pin for the default peak intensity of two 100 mW, 10 µm beams
    let s = SpeciesData::bundled("ca40").unwrap();
    let q = s.standard_qubit();
    let f = field(1550.0, 2.0 * 636.6198e6);
    let el = elastic_rate(&s, &q, &f).unwrap();
    let inel = inelastic_rate(&s, &q, &f).unwrap();
    assert_relative_eq!(el, CA_1550_ELASTIC, max_relative = 1e-6);
    assert_relative_eq!(inel, CA_1550_INELASTIC, max_relative = 1e-6);
}

const CA_1550_ELASTIC: f64 = 6.595892e-4;
const CA_1550_INELASTIC: f64 = 4.876094e-2;

proptest! {
    #[test]
    fn elastic_ignores_global_polarization_phase(lambda in 300.0f64..3000.0, phase in 0.0f64..6.3, sp in 0usize..4) {
        let s = SpeciesData::bundled(SPECIES[sp]).unwrap();
        let q = s.standard_qubit();
        let f = field(lambda, 1e8);
        let rotated = LaserField { polarization: f.polarization.map(|c| c * Complex64::from_polar(1.0, phase)), ..f };
        if let Ok(a) = elastic_rate(&s, &q, &f) {
            let b = elastic_rate(&s, &q, &rotated).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            let ia = inelastic_rate(&s, &q, &f).unwrap();
            let ib = inelastic_rate(&s, &q, &rotated).unwrap();
            prop_assert!((ia - ib).abs() <= 1e-12 * ia);
        }
    }

    #[test]
    fn rates_non_negative_and_linear(lambda in 250.0f64..5000.0, intensity in 1.0f64..1e10, sp in 0usize..4) {
        let s = SpeciesData::bundled(SPECIES[sp]).unwrap();
        let q = s.standard_qubit();
        let f = field(lambda, intensity);
        if let Ok(d) = ion_decoherence(&s, &q, &f) {
            prop_assert!(d.elastic >= 0.0 && d.inelastic >= 0.0 && d.metastable > 0.0);
            let twice = ion_decoherence(&s, &q, &f.with_intensity(2.0 * intensity)).unwrap();
            prop_assert!((twice.scattering() - 2.0 * d.scattering()).abs() <= 1e-12 * twice.scattering());
            prop_assert_eq!(twice.metastable, d.metastable);
        }
    }
}
