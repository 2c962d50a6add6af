use nalgebra::DVector;
use nltva_core::hbm::{Aft, HbmConfig, HbmSystem};
use nltva_core::model::{tune_dimensionless, tune_linear, tune_nonlinear, SystemParams};
use nltva_core::regions::{classify_level, dimensionless_params, OperationRegion};
use nltva_core::timedomain::{area_ratio, map_indices, AttractorKind, Execution, GridSpec};
use proptest::prelude::*;

fn rank(r: OperationRegion) -> u8 {
    match r {
        OperationRegion::Safe => 0,
        OperationRegion::Unsafe => 1,
        OperationRegion::Unacceptable => 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dimensional_and_dimensionless_tuning_agree(eps in 0.001f64..0.5, m1 in 0.1f64..10.0, k1 in 0.1f64..10.0, knl1 in 0.0f64..5.0) {
        let (k2, c2) = tune_linear(m1, k1, eps).unwrap();
        let knl2 = tune_nonlinear(knl1, eps).unwrap();
        let d = tune_dimensionless(eps, 1.0).unwrap();
        let wn1 = (k1 / m1).sqrt();
        let m2 = eps * m1;
        let wn2 = (k2 / m2).sqrt();
        prop_assert!((wn2 / wn1 - d.lambda).abs() <= 1e-12 * d.lambda);
        prop_assert!((c2 / (2.0 * m2 * wn2) - d.mu2).abs() <= 1e-12 * d.mu2);
        // β3/α3 = knl2 / (ε knl1)
        prop_assert!((knl2 - eps * knl1 * d.beta3).abs() <= 1e-12 * knl2.max(1e-300));
    }

    #[test]
    fn unit_realization_scales_with_departures(eps in 0.005f64..0.2, p_mu in 0.5f64..2.0, p_beta in 0.0f64..2.0) {
        let nominal = dimensionless_params(eps, 1.0, 1.0, 0.001).unwrap();
        let p = dimensionless_params(eps, p_mu, p_beta, 0.001).unwrap();
        prop_assert!((p.c2 - p_mu * nominal.c2).abs() <= 1e-14 * nominal.c2 * p_mu.max(1.0));
        prop_assert!((p.knl2 - p_beta * nominal.knl2).abs() <= 1e-14 * nominal.knl2 * p_beta.max(1.0));
        prop_assert_eq!(p.k2, nominal.k2);
    }

    #[test]
    fn aft_round_trip(coeffs in proptest::collection::vec(-1.0f64..1.0, 11)) {
        let aft = Aft::new(HbmConfig::new(5, 128).unwrap()).unwrap();
        let t = aft.to_time(&coeffs);
        let mut back = vec![0.0; 11];
        aft.to_freq(&t, &mut back);
        for (a, b) in coeffs.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_solution_has_zero_residual(omega in 0.3f64..3.0, f in 0.001f64..1.0) {
        let p = SystemParams { knl1: 0.0, knl2: 0.0, ..SystemParams::reference_nltva() };
        let sys = HbmSystem::new(p, HbmConfig::default()).unwrap();
        let c = sys.linear_solution(omega, f);
        let r = sys.residual(&c, omega, f);
        prop_assert!(r.amax() <= 1e-12 * f.max(1.0));
    }

    #[test]
    fn coefficient_jacobian_matches_finite_differences(seed in proptest::collection::vec(-0.5f64..0.5, 22), omega in 0.5f64..2.5) {
        let sys = HbmSystem::new(SystemParams::reference_nltva(), HbmConfig::default()).unwrap();
        let c = DVector::from_vec(seed);
        let f = 0.1;
        let jac = sys.coeff_jacobian(&c, omega);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for j in 0..c.len() {
            let mut cp = c.clone();
            let mut cm = c.clone();
            cp[j] += h;
            cm[j] -= h;
            let col = (sys.residual(&cp, omega, f) - sys.residual(&cm, omega, f)) / (2.0 * h);
            worst = worst.max((col - jac.column(j)).amax());
        }
        prop_assert!(worst < 1e-5, "max deviation {worst}");
    }

    #[test]
    fn ratio_is_count_ratio(low in 1usize..200, high in 0usize..50, other in 0usize..20) {
        let mut labels = vec![AttractorKind::PeriodicLow; low];
        labels.extend(vec![AttractorKind::PeriodicHigh; high]);
        labels.extend(vec![AttractorKind::Quasiperiodic; other]);
        let r = area_ratio(&labels).unwrap();
        prop_assert!((r - 100.0 * high as f64 / low as f64).abs() < 1e-12);
    }

    #[test]
    fn grid_points_stay_in_window(nx in 1usize..30, nv in 1usize..30, idx in 0usize..900) {
        let g = GridSpec { x_range: (-1.0, 2.0), v_range: (-3.0, 0.5), nx, nv };
        let i = idx % g.cells();
        let (x, v) = g.point(i);
        prop_assert!((-1.0..=2.0).contains(&x) && (-3.0..=0.5).contains(&v));
    }

    #[test]
    fn regions_are_ordered_in_forcing(appear in 0.01f64..1.0, gap in 0.0f64..1.0, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let ev = Some((appear, appear + gap));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(rank(classify_level(ev, lo)) <= rank(classify_level(ev, hi)));
        prop_assert_eq!(classify_level(None, hi), OperationRegion::Safe);
    }

    #[test]
    fn execution_modes_agree(n in 0usize..500) {
        let f = |i: usize| (i as f64).sin().to_bits();
        prop_assert_eq!(map_indices(n, Execution::Sequential, f), map_indices(n, Execution::Parallel, f));
    }
}
