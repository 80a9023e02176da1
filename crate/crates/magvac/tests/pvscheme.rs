use std::f64::consts::PI;

use magvac::pvscheme::*;
use magvac::quad::QuadratureConfig;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn s123() -> PvScheme {
    PvScheme::new(1.0, 2.0, 3.0).unwrap()
}

#[test]
fn coefficients_and_log_lambda() {
    let s = s123();
    let c = s.coefficients();
    assert!((c[1] + 1.6).abs() < 1e-15 && (c[2] - 0.6).abs() < 1e-15);
    assert!((s.log_lambda() - (1.6 * 2f64.ln() - 0.6 * 3f64.ln())).abs() < 1e-15);
    assert!((s.log_lambda() - 0.449868).abs() < 1e-6);
    let (a, b) = s.sum_rules();
    assert!(a.abs() < 1e-15 && b.abs() < 1e-14);
}

#[test]
fn invalid_masses() {
    assert!(PvScheme::new(0.0, 1.0, 2.0).is_err());
    assert!(PvScheme::new(1.0, 1.0, 2.0).is_err());
    assert!(PvScheme::new(1.0, 3.0, 2.0).is_err());
    assert!(make_scheme(1.0, 2.0, f64::INFINITY).is_err());
}

#[test]
fn heavy_regulators_keep_sum_rules() {
    for k in [10.0, 1e3, 1e6] {
        let s = PvScheme::new(1.0, 2.0 * k, 3.0 * k).unwrap();
        let c = s.coefficients();
        assert!((c[1] + 1.8).abs() < 0.25 / (k * k));
        let (a, b) = s.sum_rules();
        assert!(a.abs() < 1e-14 && b.abs() < 1e-14 * 9.0 * k * k);
    }
}

#[test]
fn weight_examples() {
    let s = s123();
    assert_eq!(pv_weight(0.0, &s).unwrap(), 0.0);
    let want = (-1f64).exp() - 1.6 * (-4f64).exp() + 0.6 * (-9f64).exp();
    assert!(rel(pv_weight(1.0, &s).unwrap(), want) < 1e-14);
    assert!((want - 0.338648).abs() < 1e-6);
    // w(s) = (s^2/2) sum c m^4 + O(s^3): the first derivative vanishes.
    let h = 1e-5;
    assert!(rel(pv_weight(h, &s).unwrap() / (h * h), 12.0) < 1e-3);
    assert!(pv_weight(-1.0, &s).is_err());
}

#[test]
fn resolvent_examples() {
    let s = s123();
    assert!(rel(pv_resolvent_weight(0.0, &s).unwrap(), 2.0 / 3.0) < 1e-15);
    for x in [0.0, 1.0, 100.0] {
        let a = pv_resolvent_weight(x, &s).unwrap();
        let b = pv_resolvent_identity(x, &s).unwrap();
        assert!(rel(a, b) < 1e-13);
    }
    // x^3 times the weight tends to prod m^2 * sum c/m^2 = 36 * 2/3.
    let x = 1e8;
    assert!(rel(pv_resolvent_weight(x, &s).unwrap() * x.powi(3), 24.0) < 1e-6);
}

#[test]
fn f_pv_limits() {
    let cfg = QuadratureConfig::default();
    let s = s123();
    assert_eq!(f_pv(0.0, &s, &cfg).unwrap(), 0.0);
    let weak = weak_field_coefficient(&s);
    assert!((weak - 0.0037985).abs() < 1e-7);
    assert!(rel(f_pv(1e-3, &s, &cfg).unwrap() / 1e-6, weak) < 1e-5);
    let strong = strong_field_coefficient(&s);
    assert!((strong - 0.037903).abs() < 1e-6);
    // Subleading term is O(log x) so the ratio closes in slowly.
    let r6 = f_pv(1e6, &s, &cfg).unwrap() / 1e6 / strong;
    let r5 = f_pv(1e5, &s, &cfg).unwrap() / 1e5 / strong;
    assert!((r6 - 1.0).abs() < (r5 - 1.0).abs() && (r6 - 1.0).abs() < 1e-3, "{r5} {r6}");
}

#[test]
fn f_pv_frozen() {
    let cfg = QuadratureConfig::default();
    let v = f_pv(1.0, &s123(), &cfg).unwrap();
    assert!(rel(v, f_pv(1.0, &s123(), &QuadratureConfig::with_rel_tol(1e-10)).unwrap()) < 1e-9);
    assert!(v > 0.0 && v < weak_field_coefficient(&s123()));
}

#[test]
fn relation_examples() {
    let cfg = QuadratureConfig::default();
    let s = s123();
    assert_eq!(relation_residual(0.0, &s, &cfg).unwrap().residual, 0.0);
    for x in [0.5, 10.0] {
        let r = relation_residual(x, &s, &cfg).unwrap();
        assert!(r.residual.abs() < 1e-9 * r.scale, "{x}: {r:?}");
    }
}

#[test]
fn half_quadratic_coefficient_fails() {
    // The quadratic term with log Lambda/(24 pi^2) leaves a residual of
    // half that size.
    let cfg = QuadratureConfig::default();
    let s = s123();
    let r = relation_residual(1.0, &s, &cfg).unwrap();
    let half = r.residual + s.log_lambda() / (24.0 * PI * PI);
    assert!(half.abs() > 1e3 * r.residual.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positivity_of_convex_combinations(
        m1 in 1.01f64..5.0, dm in 0.01f64..5.0,
        s in 0.0f64..20.0, x in 0.0f64..50.0,
    ) {
        let sc = PvScheme::new(1.0, m1, m1 + dm).unwrap();
        prop_assert!(pv_weight(s, &sc).unwrap() >= 0.0);
        prop_assert!(pv_resolvent_weight(x, &sc).unwrap() >= 0.0);
        prop_assert!(sc.combine(|t| t * t.ln()) >= -1e-12);
    }

    #[test]
    fn scaling_covariance(lam in 0.3f64..3.0, x in 0.1f64..5.0) {
        // f_pv for masses lam*m at lam^2 x equals lam^4 f_pv(x).
        let cfg = QuadratureConfig::default();
        let a = f_pv(lam * lam * x, &s123().scaled(lam).unwrap(), &cfg).unwrap();
        let b = lam.powi(4) * f_pv(x, &s123(), &cfg).unwrap();
        prop_assert!(rel(a, b) < 1e-9);
    }
}
