use std::f64::consts::PI;

use magvac::quad::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn coth_reduced_examples() {
    assert_eq!(coth_reduced(0.0).unwrap(), 0.0);
    let l2 = 2f64.ln();
    assert!(rel(coth_reduced(l2).unwrap(), 5.0 / 3.0 * l2 - 1.0) < 1e-15);
    assert!((coth_reduced(50.0).unwrap() - 49.0).abs() < 1e-14);
    assert!(coth_reduced(-1.0).is_err());
    assert!(coth_reduced(f64::NAN).is_err());
}

#[test]
fn fused_subtraction_at_moderate_x() {
    let x = 1.5f64;
    let naive = x / x.tanh() - 1.0 - x * x / 3.0;
    assert!(rel(lred_sub(x), naive) < 1e-13);
}

#[test]
fn resolvent_laplace_3d() {
    // (4 pi)^{-3/2} int e^{-s} e^{-1/4s} s^{-3/2} ds = e^{-1}/(4 pi)
    let cfg = QuadratureConfig::default();
    let r = proper_time_integrate(|s| (-0.25 / s).exp(), f64::INFINITY, 1.5, &Weight::Single { mass: 1.0 }, &cfg).unwrap();
    let v = r.value * (4.0 * PI).powf(-1.5);
    assert!(rel(v, (-1f64).exp() / (4.0 * PI)) < 1e-11, "{v}");
}

#[test]
fn resolvent_laplace_1d() {
    let cfg = QuadratureConfig::default();
    let r = proper_time_integrate(|s| (-1.0 / s).exp(), f64::INFINITY, 0.5, &Weight::Single { mass: 1.0 }, &cfg).unwrap();
    let v = r.value * (4.0 * PI).powf(-0.5);
    assert!(rel(v, (-2f64).exp() / 2.0) < 1e-11, "{v}");
}

#[test]
fn zero_integrand() {
    let cfg = QuadratureConfig::default();
    let r = proper_time_integrate(|_| 0.0, 1.0, 1.0, &Weight::Single { mass: 1.0 }, &cfg).unwrap();
    assert_eq!(r.value, 0.0);
}

#[test]
fn rejects_nonintegrable_and_bad_config() {
    let w = Weight::Single { mass: 1.0 };
    let cfg = QuadratureConfig::default();
    assert!(proper_time_integrate(|_| 1.0, 0.0, 1.0, &w, &cfg).is_err());
    assert!(proper_time_integrate(|s| s, 1.0, 1.0, &w, &QuadratureConfig::with_rel_tol(0.0)).is_err());
    assert!(proper_time_integrate(|s| s, 1.0, 1.0, &Weight::Single { mass: -1.0 }, &cfg).is_err());
}

#[test]
fn nondecaying_integrand_is_unsupported() {
    let cfg = QuadratureConfig::default();
    let r = integrate_half_line(|s| 1.0 / (1.0 + s), 1.0, 1.0, &cfg);
    assert!(matches!(r, Err(magvac::Error::Unsupported(_))));
}

#[test]
fn bernoulli_values() {
    let b = |n| bernoulli_even(n).unwrap().value;
    assert_eq!(b(1), 1.0 / 6.0);
    assert_eq!(b(2), -1.0 / 30.0);
    assert_eq!(b(3), 1.0 / 42.0);
    assert_eq!(b(6), -691.0 / 2730.0);
    assert_eq!(bernoulli_even(2).unwrap().exact.to_string(), "-1/30");
    assert!(bernoulli_even(0).is_err());
    assert!(bernoulli_even(BERNOULLI_MAX_N + 1).is_err());
}

#[test]
fn bernoulli_zeta_relation() {
    // |B_2n| = 2 (2n)! zeta(2n) / (2 pi)^{2n}, zeta(2n) ~ 1 for large n.
    for n in [10u32, 20, 30] {
        let b = bernoulli_even(n).unwrap().value.abs();
        let mut fact = 1.0f64;
        for k in 1..=2 * n {
            fact *= k as f64;
        }
        let zeta: f64 = (1..200).map(|k| (k as f64).powi(-(2 * n as i32))).sum();
        let want = 2.0 * fact * zeta / (2.0 * PI).powi(2 * n as i32);
        assert!(rel(b, want) < 1e-12);
    }
}

#[test]
fn gauss_legendre_weights_sum() {
    for n in [1, 5, 40, 120] {
        let (x, w) = gauss_legendre(n);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }
}

#[test]
fn breaks_handle_kinks() {
    let cfg = QuadratureConfig::default();
    let r = integrate_breaks(&|x: f64| x.abs(), &[-1.0, 0.0, 2.0], &cfg).unwrap();
    assert!((r.value - 2.5).abs() < 1e-14);
    let r = integrate(|x| x.exp(), 1.0, 0.0, &cfg).unwrap();
    assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-14);
}

#[test]
fn compensated_sum() {
    let v = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
    assert_eq!(v, 2.0);
}

proptest! {
    #[test]
    fn matches_naive_formula(lx in (1e-3f64).ln()..(30f64).ln()) {
        let x = lx.exp();
        let naive = x * x.cosh() / x.sinh() - 1.0;
        // The naive form rounds near 1 + naive before cancelling.
        let tol = 1e-14 + 8.0 * f64::EPSILON * (1.0 + naive) / naive;
        prop_assert!(rel(coth_reduced(x).unwrap(), naive) < tol);
    }

    #[test]
    fn nonnegative_and_increasing(x in 0.0f64..200.0, dx in 1e-6f64..1.0) {
        let a = lred(x);
        prop_assert!(a >= 0.0);
        prop_assert!(lred(x + dx) >= a);
    }

    #[test]
    fn fused_difference_is_nonpositive(x in 0.0f64..50.0) {
        prop_assert!(lred_sub(x) <= 0.0);
    }
}
