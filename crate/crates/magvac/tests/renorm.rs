use std::f64::consts::PI;

use magvac::pvscheme::PvScheme;
use magvac::quad::QuadratureConfig;
use magvac::renorm::*;
use proptest::prelude::*;

fn s123() -> PvScheme {
    PvScheme::new(1.0, 2.0, 3.0).unwrap()
}

#[test]
fn charge_renormalization() {
    let st = renormalize(1.0, &s123()).unwrap();
    let z3 = 1.0 / (1.0 + 2.0 / (3.0 * PI) * s123().log_lambda());
    assert_eq!(st.z3, z3);
    assert!((st.z3 - 0.912854376037).abs() < 1e-11);
    assert!((st.e_ph - 0.955434129617).abs() < 1e-11);
    assert!(renormalize(0.0, &s123()).is_err());
}

#[test]
fn nearly_degenerate_scheme_keeps_the_charge() {
    let sc = PvScheme::new(1.0, 1.0 + 1e-9, 1.0 + 2e-9).unwrap();
    let st = renormalize(0.7, &sc).unwrap();
    assert!((st.z3 - 1.0).abs() < 1e-8 && (st.e_ph - 0.7).abs() < 1e-8);
}

#[test]
fn physical_field() {
    let st = renormalize(1.0, &s123()).unwrap();
    assert_eq!(bph_of(0.0, &st).unwrap(), 0.0);
    assert!((bph_of(1.0, &st).unwrap() - 1.0 / st.z3.sqrt()).abs() < 1e-15);
    assert!((bph_of(1.0, &st).unwrap() - 1.046645).abs() < 1e-6);
    assert!(bph_of(-1.0, &st).is_err());
}

#[test]
fn bound_constant_value() {
    let k = bound_constant(1.0, &QuadratureConfig::default()).unwrap();
    assert!(((k - 1.0 / (180.0 * PI * PI)) * 180.0 * PI * PI).abs() < 1e-6, "{k}");
}

#[test]
fn zero_field() {
    let st = renormalize(0.5, &s123()).unwrap();
    let d = energy_difference(0.0, &st, &QuadratureConfig::default()).unwrap();
    assert_eq!((d.difference, d.identity, d.bound), (0.0, 0.0, 0.0));
}

#[test]
fn identity_examples() {
    let cfg = QuadratureConfig::default();
    let d = energy_difference(1.0, &renormalize(0.5, &s123()).unwrap(), &cfg).unwrap();
    assert!((d.difference - d.identity).abs() < 1e-9 * d.scale);
    let heavy = PvScheme::new(1.0, 10.0, 20.0).unwrap();
    let d = energy_difference(1.0, &renormalize(0.3, &heavy).unwrap(), &cfg).unwrap();
    assert!(d.difference.abs() <= d.bound, "{d:?}");
}

#[test]
fn difference_shrinks_with_regulator_mass() {
    let cfg = QuadratureConfig::default();
    let mut last = f64::INFINITY;
    for m1 in [5.0, 10.0, 20.0, 40.0] {
        let sc = PvScheme::new(1.0, m1, 2.0 * m1).unwrap();
        let d = energy_difference(1.0, &renormalize(0.3, &sc).unwrap(), &cfg).unwrap();
        assert!(d.difference.abs() < last);
        last = d.difference.abs();
    }
}

#[test]
fn quadratic_content_cancels() {
    let cfg = QuadratureConfig::default();
    let st = renormalize(1.0, &s123()).unwrap();
    let r: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&b| energy_difference(b, &st, &cfg).unwrap().difference / (b * b))
        .collect();
    assert!(r[1].abs() < 0.02 * r[0].abs() && r[2].abs() < 0.02 * r[1].abs(), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn product_invariance(e in 0.05f64..2.0, b in 0.0f64..100.0) {
        let st = renormalize(e, &s123()).unwrap();
        let bph = bph_of(b, &st).unwrap();
        prop_assert!((e * b - st.e_ph * bph).abs() <= 4.0 * f64::EPSILON * e * b);
    }
}
