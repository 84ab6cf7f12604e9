mod common;

use common::{random_real_spectrum, random_spectrum, rng, three_points};
use num_complex::Complex64;
use proptest::prelude::*;
use pwsplit::metrics::{relative_fit_error, relative_residual_error};
use pwsplit::model::{apply_f, apply_fu, apply_fu_adjoint, apply_fx_derivative, apply_fx_gradient, phase_factors};
use pwsplit::sim::{add_relative_noise, synthesize_measurements, ReflectionConfig, ScenarioConfig};
use pwsplit::solvers::{direct_split, tikhonov_functional, tikhonov_split, FilterKind, RegularizationConfig};
use pwsplit::spectral::{product_inner, product_norm, weighted_inner, weighted_norm_sq};
use pwsplit::{Geometry, MeasurementSet, Pwv, SplitState, TimeGrid, WeightedNormParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn geometry_strategy() -> impl Strategy<Value = Geometry> {
    prop::collection::vec(0.005f64..0.08, 1..5).prop_map(|gaps| {
        let mut d = vec![0.0];
        for g in gaps {
            d.push(d.last().unwrap() + g);
        }
        Geometry::new(d).unwrap()
    })
}

fn params_strategy() -> impl Strategy<Value = WeightedNormParams> {
    prop_oneof![Just((0.0, 0.0)), Just((0.0, 1.0)), Just((0.0, 2.0)), Just((1.0, 3.0))]
        .prop_map(|(s, r)| WeightedNormParams::new(s, r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phase_factors_have_unit_modulus(geometry in geometry_strategy(), u in 0.2f64..20.0, m in 2usize..64, period in 0.2f64..2.0) {
        let grid = TimeGrid::new(m, period).unwrap().frequency_grid();
        let pf = phase_factors(&geometry, Pwv::new(u).unwrap(), &grid);
        for v in pf.forward.iter().chain(&pf.backward).flatten() {
            prop_assert!((v.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn forward_operator_is_linear(seed: u64, geometry in geometry_strategy(), u in 0.5f64..12.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let m = 32;
        let (x1, x2, y1, y2) = (random_spectrum(&mut r, m, 0.75), random_spectrum(&mut r, m, 0.75),
                                random_spectrum(&mut r, m, 0.75), random_spectrum(&mut r, m, 0.75));
        let u = Pwv::new(u).unwrap();
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let combined = apply_fu(
            &x1.scaled(ca).add(&y1.scaled(cb)).unwrap(),
            &x2.scaled(ca).add(&y2.scaled(cb)).unwrap(),
            u,
            &geometry,
        ).unwrap();
        let fx = apply_fu(&x1, &x2, u, &geometry).unwrap();
        let fy = apply_fu(&y1, &y2, u, &geometry).unwrap();
        for ((c, p), q) in combined.iter().zip(&fx).zip(&fy) {
            for j in 0..m {
                let expect = ca * p.values()[j] + cb * q.values()[j];
                prop_assert!((c.values()[j] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
            }
        }
    }

    #[test]
    fn forward_operator_preserves_reality(seed: u64, geometry in geometry_strategy(), u in 0.5f64..12.0, half in 1usize..40) {
        // odd lengths: every bin has a distinct mirror partner
        let m = 2 * half + 1;
        let mut r = rng(seed);
        let x1 = random_real_spectrum(&mut r, m, 0.75);
        let x2 = random_real_spectrum(&mut r, m, 0.75);
        for ch in apply_fu(&x1, &x2, Pwv::new(u).unwrap(), &geometry).unwrap() {
            prop_assert!(ch.is_conjugate_symmetric(1e-12));
        }
    }

    #[test]
    fn forward_operator_is_bounded(seed: u64, geometry in geometry_strategy(), u in 0.5f64..12.0, params in params_strategy()) {
        let mut r = rng(seed);
        let state = SplitState::new(random_spectrum(&mut r, 40, 0.75), random_spectrum(&mut r, 40, 0.75), Pwv::new(u).unwrap()).unwrap();
        let lhs = product_norm(&apply_f(&state, &geometry).unwrap(), params.s);
        let rhs = (2.0 * geometry.points() as f64).sqrt()
            * (weighted_norm_sq(&state.x1, params.r) + weighted_norm_sq(&state.x2, params.r) + u * u).sqrt();
        prop_assert!(lhs <= rhs);
    }

    #[test]
    fn adjoint_identity(seed: u64, geometry in geometry_strategy(), u in 0.5f64..12.0, params in params_strategy()) {
        let mut r = rng(seed);
        let m = 36;
        let (x1, x2) = (random_spectrum(&mut r, m, 0.75), random_spectrum(&mut r, m, 0.75));
        let y: Vec<_> = (0..geometry.points()).map(|_| random_spectrum(&mut r, m, 0.75)).collect();
        let u = Pwv::new(u).unwrap();
        let lhs = product_inner(&apply_fu(&x1, &x2, u, &geometry).unwrap(), &y, params.s).unwrap();
        let (a1, a2) = apply_fu_adjoint(&y, &geometry, u, params).unwrap();
        let rhs = weighted_inner(&x1, &a1, params.r).unwrap() + weighted_inner(&x2, &a2, params.r).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()));
    }

    #[test]
    fn velocity_gradient_is_adjoint_of_derivative(seed: u64, geometry in geometry_strategy(), u in 0.5f64..12.0, h in -2.0f64..2.0, params in params_strategy()) {
        let mut r = rng(seed);
        let m = 28;
        let state = SplitState::new(random_spectrum(&mut r, m, 0.75), random_spectrum(&mut r, m, 0.75), Pwv::new(u).unwrap()).unwrap();
        let y: Vec<_> = (0..geometry.points()).map(|_| random_spectrum(&mut r, m, 0.75)).collect();
        let lhs = product_inner(&apply_fx_derivative(&state, &geometry, h).unwrap(), &y, params.s).unwrap().re;
        let rhs = h * apply_fx_gradient(&state, &geometry, &y, params).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn tikhonov_solution_is_a_minimizer(seed: u64, u in 0.5f64..12.0, log_alpha in -6.0f64..0.0, params in params_strategy()) {
        let mut r = rng(seed);
        let geometry = three_points();
        let m = 20;
        let data: Vec<_> = (0..3).map(|_| random_spectrum(&mut r, m, 0.75)).collect();
        let alpha = 10f64.powf(log_alpha);
        let pwv = Pwv::new(u).unwrap();
        let (x1, x2) = tikhonov_split(&data, &geometry, pwv, alpha, params).unwrap();
        let best = SplitState::new(x1.clone(), x2.clone(), pwv).unwrap();
        let j0 = tikhonov_functional(&best, &data, &geometry, alpha, params, None).unwrap();
        for _ in 0..10 {
            let eps = Complex64::new(r.random_range(1e-6..1e-3), 0.0);
            let d1 = random_spectrum(&mut r, m, 0.75).scaled(eps);
            let d2 = random_spectrum(&mut r, m, 0.75).scaled(eps);
            let moved = SplitState::new(x1.add(&d1).unwrap(), x2.add(&d2).unwrap(), pwv).unwrap();
            let j1 = tikhonov_functional(&moved, &data, &geometry, alpha, params, None).unwrap();
            prop_assert!(j1 >= j0 * (1.0 - 1e-12), "{j1} < {j0}");
        }
    }

    #[test]
    fn residual_error_is_scale_invariant(seed: u64, re in -5.0f64..5.0, im in -5.0f64..5.0, u in 0.5f64..12.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let mut r = rng(seed);
        let geometry = three_points();
        let m = 24;
        let data: Vec<_> = (0..3).map(|_| random_spectrum(&mut r, m, 0.75)).collect();
        let state = SplitState::new(random_spectrum(&mut r, m, 0.75), random_spectrum(&mut r, m, 0.75), Pwv::new(u).unwrap()).unwrap();
        let c = Complex64::new(re, im);
        let e = relative_residual_error(&state, &MeasurementSet::new(data.clone(), geometry.clone(), None).unwrap()).unwrap();
        let scaled_state = SplitState::new(state.x1.scaled(c), state.x2.scaled(c), state.u).unwrap();
        let scaled = MeasurementSet::new(data.iter().map(|d| d.scaled(c)).collect(), geometry, None).unwrap();
        let e2 = relative_residual_error(&scaled_state, &scaled).unwrap();
        prop_assert!((e - e2).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn fit_error_vanishes_only_for_equal_spectra(seed: u64, bin in 0usize..24, bump in 1e-9f64..1.0) {
        let mut r = rng(seed);
        let truth = SplitState::new(random_spectrum(&mut r, 24, 0.75), random_spectrum(&mut r, 24, 0.75), Pwv::new(3.0).unwrap()).unwrap();
        let params = WeightedNormParams::default();
        prop_assert_eq!(relative_fit_error(&truth.clone(), &truth, params).unwrap(), 0.0);
        let mut x2 = truth.x2.clone();
        x2.values_mut()[bin] += Complex64::new(0.0, bump);
        let off = SplitState::new(truth.x1.clone(), x2, truth.u).unwrap();
        prop_assert!(relative_fit_error(&off, &truth, params).unwrap() > 0.0);
    }

    #[test]
    fn direct_split_is_scale_covariant(seed: u64, re in -5.0f64..5.0, im in -5.0f64..5.0, u in 0.5f64..12.0, hard: bool) {
        let mut r = rng(seed);
        let (p1, p2) = (random_spectrum(&mut r, 30, 0.75), random_spectrum(&mut r, 30, 0.75));
        let c = Complex64::new(re, im);
        let filter = if hard { FilterKind::HardThreshold } else { FilterKind::TikhonovShift };
        let cfg = RegularizationConfig::new(1e-3, WeightedNormParams::default()).unwrap().with_filter(filter);
        let pwv = Pwv::new(u).unwrap();
        let (a1, a2) = direct_split(&p1, &p2, pwv, 0.15, &cfg).unwrap();
        let (b1, b2) = direct_split(&p1.scaled(c), &p2.scaled(c), pwv, 0.15, &cfg).unwrap();
        for (x, y) in a1.values().iter().chain(a2.values()).zip(b1.values().iter().chain(b2.values())) {
            prop_assert!((x * c - y).norm() <= 1e-10 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn injected_noise_has_exact_level(seed: u64, delta in 0.0f64..0.5) {
        let mut r = rng(seed);
        let clean = random_real_spectrum(&mut r, 50, 0.75);
        let mut noise_rng = ChaCha20Rng::seed_from_u64(seed);
        let noisy = add_relative_noise(&clean, delta, &mut noise_rng);
        let rel = (weighted_norm_sq(&noisy.sub(&clean).unwrap(), 0.0) / weighted_norm_sq(&clean, 0.0)).sqrt();
        prop_assert!((rel - delta).abs() <= 1e-12);
        prop_assert!(noisy.is_conjugate_symmetric(1e-12));
    }

    #[test]
    fn synthesis_is_reproducible_and_consistent(seed: u64, u in 1.0f64..10.0, delta in 0.0f64..0.2, points in prop::sample::select(vec![2usize, 3, 5])) {
        let mut sc = ScenarioConfig::standard(points, u, delta, seed).unwrap();
        sc.samples = 64;
        let refl = ReflectionConfig::default();
        let a = synthesize_measurements(&sc, &refl).unwrap();
        let b = synthesize_measurements(&sc, &refl).unwrap();
        prop_assert_eq!(&a.noisy, &b.noisy);
        prop_assert!(relative_residual_error(&a.truth, &a.clean).unwrap() <= 1e-10);
        for ch in a.noisy.channels() {
            prop_assert!(ch.is_conjugate_symmetric(1e-12));
        }
    }
}
