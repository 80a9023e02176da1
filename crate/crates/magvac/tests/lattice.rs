use std::f64::consts::PI;

use magvac::lattice::*;
use magvac::pvscheme::{f_pv, PvScheme};
use magvac::quad::QuadratureConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn free_spectrum_matches_dispersion() {
    let spec = LatticeSpec::new(4, 1.0, 0, 2).unwrap();
    let zero = vec![[0.0; 3]; spec.sites()];
    for tw in [[0.0; 3], [0.4, -1.1, 0.0]] {
        let h = build_pauli(&spec, &LinkPhases::zero(&spec), &zero, tw).unwrap();
        let e = eigenvalues(&h).unwrap();
        assert!(max_gap(&e, &free_dispersion(&spec, tw)) < 1e-12);
    }
    // Exact degeneracies at zero twist: 0 appears twice (spin), 8 twice.
    let e = free_dispersion(&spec, [0.0; 3]);
    assert_eq!(e.iter().filter(|&&v| v == 0.0).count(), 2);
}

#[test]
fn pauli_is_hermitian() {
    let spec = LatticeSpec::new(5, 0.3, 2, 2).unwrap();
    let b = spec.field();
    let z: Vec<[f64; 3]> = (0..spec.sites()).map(|s| [0.1 * s as f64, -0.2, b]).collect();
    let h = build_pauli(&spec, &LinkPhases::landau(&spec), &z, [0.3, 0.7, 0.0]).unwrap();
    assert!(hermitian_defect(&h) < 1e-13);
}

#[test]
fn landau_phases_carry_uniform_flux() {
    let spec = LatticeSpec::new(6, 0.5, 1, 3).unwrap();
    let ph = LinkPhases::landau(&spec);
    let want = spec.field() * 0.25;
    for s in 0..spec.sites() {
        assert!((ph.plaquette_flux(&spec, s, 0, 1) - want).abs() < 1e-12);
        assert!(ph.plaquette_flux(&spec, s, 0, 2).abs() < 1e-12);
    }
    assert_eq!(ph.check_quantized(&spec).unwrap(), 1);
}

#[test]
fn gauge_transform_preserves_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = LatticeSpec::new(6, 0.4, 1, 2).unwrap();
    let b = spec.field();
    let z = vec![[0.0, 0.0, b]; spec.sites()];
    let ph = LinkPhases::landau(&spec);
    let chi: Vec<f64> = (0..spec.sites()).map(|_| rng.random_range(-PI..PI)).collect();
    let g = ph.gauge_transform(&spec, &chi).unwrap();
    let e0 = eigenvalues(&build_pauli(&spec, &ph, &z, [0.5, 0.2, 0.0]).unwrap()).unwrap();
    let e1 = eigenvalues(&build_pauli(&spec, &g, &z, [0.5, 0.2, 0.0]).unwrap()).unwrap();
    assert!(max_gap(&e0, &e1) < 1e-11);
}

#[test]
fn spin_doubling_without_zeeman() {
    let spec = LatticeSpec::new(5, 0.5, 1, 2).unwrap();
    let z = vec![[0.0; 3]; spec.sites()];
    let e = eigenvalues(&build_pauli(&spec, &LinkPhases::landau(&spec), &z, [0.1, 0.2, 0.0]).unwrap()).unwrap();
    for pair in e.chunks(2) {
        assert!((pair[0] - pair[1]).abs() < 1e-11);
    }
}

#[test]
fn landau_clustering() {
    let spec = LatticeSpec::new(16, 0.25, 2, 2).unwrap();
    let b = spec.field();
    let z = vec![[0.0, 0.0, b]; spec.sites()];
    let e = eigenvalues(&build_pauli(&spec, &LinkPhases::landau(&spec), &z, [0.0; 3]).unwrap()).unwrap();
    // Two zero modes, then four states near 2b.
    let tol = 4.0 * (spec.a * b).powi(2);
    for &v in &e[..2] {
        assert!(v.abs() < tol, "{v} vs {tol}");
    }
    for &v in &e[2..6] {
        assert!((v - 2.0 * b).abs() < 2.0 * tol, "{v}");
    }
    assert!(e[6] > 3.0 * b);
}

#[test]
fn flux_checks() {
    let spec = LatticeSpec::new(4, 0.5, 1, 2).unwrap();
    assert!(matches!(spec.check_field(1.0), Err(magvac::Error::FluxInconsistency(_))));
    assert!(spec.check_field(2.0 * PI / 4.0).is_ok());
    let bad = vec![0.1; 16];
    assert!(matches!(LinkPhases::from_plaquette_fluxes(&spec, &bad), Err(magvac::Error::FluxInconsistency(_))));
    let sc = PvScheme::new(1.0, 2.0, 3.0).unwrap();
    assert!(pv_energy_density(&spec, 1.0, &sc, Route::Blocks).is_err());
}

#[test]
fn dimension_guard() {
    let spec = LatticeSpec::new(30, 0.1, 0, 3).unwrap();
    let z = vec![[0.0; 3]; spec.sites()];
    assert!(matches!(build_pauli(&spec, &LinkPhases::zero(&spec), &z, [0.0; 3]), Err(magvac::Error::DimensionTooLarge { .. })));
}

#[test]
fn zero_field_zero_density() {
    let sc = PvScheme::new(1.0, 2.0, 3.0).unwrap();
    for dims in [2, 3] {
        let spec = LatticeSpec::new(4, 0.5, 0, dims).unwrap().with_twists(2).unwrap();
        for route in [Route::Dense, Route::Blocks] {
            assert_eq!(pv_energy_density(&spec, 0.0, &sc, route).unwrap().density, 0.0);
        }
    }
}

#[test]
fn routes_agree() {
    let sc = PvScheme::new(1.0, 2.0, 3.0).unwrap();
    for (n, dims) in [(6, 2), (4, 3)] {
        let spec = LatticeSpec::new(n, 0.5, 1, dims).unwrap().with_twists(2).unwrap();
        let b = spec.field();
        let d = pv_energy_density(&spec, b, &sc, Route::Dense).unwrap();
        let k = pv_energy_density(&spec, b, &sc, Route::Blocks).unwrap();
        assert!(((d.density - k.density) / k.density).abs() < 1e-10);
        assert!(max_gap(&d.eigenvalues_field, &k.eigenvalues_field) < 1e-10);
        assert_eq!(d.eigenvalues_free.len(), spec.matrix_dim() * 2usize.pow(dims as u32));
    }
}

#[test]
fn coarse_density_within_factor_two() {
    let sc = PvScheme::new(1.0, 2.0, 3.0).unwrap();
    let spec = LatticeSpec::new(8, 1.0 / 8.0, 1, 3).unwrap().with_twists(4).unwrap();
    let b = spec.field();
    let d = pv_energy_density(&spec, b, &sc, Route::Blocks).unwrap().density;
    let r = d / f_pv(b, &sc, &QuadratureConfig::default()).unwrap();
    assert!((0.5..=2.0).contains(&r), "ratio {r}");
}

#[test]
fn near_degenerate_scheme_telescopes() {
    let cfg = QuadratureConfig::default();
    let spec = LatticeSpec::new(6, 1.0 / 6.0, 1, 3).unwrap().with_twists(2).unwrap();
    let b = spec.field();
    let d = 1e-3;
    let sc = PvScheme::new(1.0, 1.0 + d, 1.0 + 2.0 * d).unwrap();
    let e = pv_energy_density(&spec, b, &sc, Route::Blocks).unwrap().density;
    let scale = f_pv(b, &PvScheme::new(1.0, 2.0, 3.0).unwrap(), &cfg).unwrap();
    assert!(e.abs() <= 1e-4 * scale, "{e} vs {scale}");
}

#[test]
fn richardson_is_exact_on_polynomials() {
    let f = |a: f64| 3.0 + 2.0 * a * a - a.powi(4);
    let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1].iter().map(|&a| (a, f(a))).collect();
    assert!((richardson_extrapolate(&pts).unwrap() - 3.0).abs() < 1e-13);
    assert!(richardson_extrapolate(&[(0.1, 1.0), (0.1, 2.0)]).is_err());
}

#[test]
fn chain_reproduces_torus() {
    // L = 2, four quanta, 12 sites: strip flux 1/3, so chains of 36 sites and
    // gcd(12, 4) = 4 momenta cover the torus exactly.
    let prof = StripeProfile::Cosine { eta: 0.5 };
    let b0 = 2.0 * PI;
    let (chain, p) = stripe_chain_spectrum(&prof, b0, 2.0, 2.0 / 12.0, 4).unwrap();
    assert_eq!(p, 36);
    let torus = stripe_torus_spectrum(&prof, b0, 2.0, 12).unwrap();
    assert!(max_gap(&chain, &torus) < 1e-9);
}

#[test]
fn chain_rejects_unquantized_flux() {
    let prof = StripeProfile::Constant;
    assert!(matches!(stripe_chain_spectrum(&prof, 1.0, 2.0, 0.25, 2), Err(magvac::Error::FluxInconsistency(_))));
    assert!(stripe_chain_spectrum(&prof, 2.0 * PI, 2.0, 0.3, 2).is_err());
}

#[test]
fn lattice_minimum_dips_below_zero() {
    // The site-sampled Zeeman term overshoots the lowest Harper band by
    // O(a^2 b^2), so the lattice operator is not nonnegative.
    let sc = PvScheme::new(1.0, 2.0, 3.0).unwrap();
    let spec = LatticeSpec::new(8, 1.0 / 8.0, 1, 2).unwrap().with_twists(2).unwrap();
    let e = pv_energy_density(&spec, spec.field(), &sc, Route::Blocks).unwrap();
    assert!(e.min_eigenvalue < 0.0 && e.min_eigenvalue > -1.0);
}

fn sweep(profile: StripeProfile, eps: Vec<f64>) -> SweepReport {
    let cfg = SweepConfig {
        profile,
        base_length: 2.0,
        flux_quanta: 4,
        base_sites: 10,
        levels: 2,
        eps,
        k2: Some(4),
        dims: 2,
        scheme: PvScheme::new(1.0, 2.0, 3.0).unwrap(),
    };
    semiclassical_sweep(&cfg, &QuadratureConfig::default()).unwrap()
}

#[test]
fn zero_profile_sweep() {
    let r = sweep(StripeProfile::Zero, vec![1.0, 0.5]);
    assert!(r.rows.iter().all(|row| row.deviation == 0.0 && row.lda_value == 0.0));
}

#[test]
fn constant_profile_has_no_eps_dependence() {
    let r = sweep(StripeProfile::Constant, vec![1.0, 0.5]);
    let (d0, d1) = (r.rows[0].deviation, r.rows[1].deviation);
    assert!((d0 - d1).abs() < 1e-6 * r.rows[0].lda_value, "{d0} {d1}");
    let cfg = QuadratureConfig::default();
    let want = f_pv(2.0 * PI, &PvScheme::new(1.0, 2.0, 3.0).unwrap(), &cfg).unwrap();
    assert!((r.rows[0].lda_value - want).abs() < 1e-12 * want);
}

#[test]
fn sweep_rejects_bad_eps() {
    let cfg = SweepConfig {
        profile: StripeProfile::Constant,
        base_length: 2.0,
        flux_quanta: 4,
        base_sites: 10,
        levels: 1,
        eps: vec![0.25, 0.5],
        k2: None,
        dims: 2,
        scheme: PvScheme::new(1.0, 2.0, 3.0).unwrap(),
    };
    assert!(semiclassical_sweep(&cfg, &QuadratureConfig::default()).is_err());
}

#[test]
fn resolution_warning() {
    let prof = StripeProfile::Gaussian { eta: 0.5, width: 0.05 };
    let r = sweep(prof, vec![1.0]);
    assert!(!r.warnings.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_gauge_invariance(seed in 0u64..1000, t1 in 0.0f64..6.0, t2 in 0.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = LatticeSpec::new(4, 0.5, 1, 2).unwrap();
        let z: Vec<[f64; 3]> = (0..spec.sites()).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let ph = LinkPhases::landau(&spec);
        let chi: Vec<f64> = (0..spec.sites()).map(|_| rng.random_range(-PI..PI)).collect();
        let g = ph.gauge_transform(&spec, &chi).unwrap();
        let e0 = eigenvalues(&build_pauli(&spec, &ph, &z, [t1, t2, 0.0]).unwrap()).unwrap();
        let e1 = eigenvalues(&build_pauli(&spec, &g, &z, [t1, t2, 0.0]).unwrap()).unwrap();
        prop_assert!(max_gap(&e0, &e1) < 1e-11);
    }

    #[test]
    fn plaquette_roundtrip(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = LatticeSpec::new(5, 1.0, 0, 2).unwrap();
        let mut flux: Vec<f64> = (0..25).map(|_| rng.random_range(-0.1..0.1)).collect();
        let s: f64 = flux[1..].iter().sum();
        flux[0] = -s;
        let ph = LinkPhases::from_plaquette_fluxes(&spec, &flux).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let got = ph.plaquette_flux(&spec, i * 5 + j, 0, 1);
                prop_assert!((got - flux[i * 5 + j]).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_solver_matches_dense(seed in 0u64..1000, p in 1usize..60, hop in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
        let h = faer::Mat::<faer::c64>::from_fn(p, p, |i, j| {
            let v = if i == j { d[i] } else if (i + 1) % p == j || (j + 1) % p == i { hop } else { 0.0 };
            faer::c64::new(v, 0.0)
        });
        let dense = eigenvalues(&h).unwrap();
        let ring = periodic_tridiagonal_eigenvalues(&d, hop).unwrap();
        prop_assert!(max_gap(&dense, &ring) < 1e-12 * (5.0 + 2.0 * hop.abs()));
    }
}
