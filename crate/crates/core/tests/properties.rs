use kle_logistic::presets::{example1, example2};
use kle_logistic::{rvt_kernel, DensityPath, InitialLaw, KleProcess};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernel_maps_into_the_unit_interval(p in 1e-6f64..1.0 - 1e-6, k in -50.0f64..50.0) {
        let (arg, jac) = rvt_kernel(p, k);
        prop_assert!((0.0..=1.0).contains(&arg));
        prop_assert!(jac >= 0.0 && jac.is_finite());
    }

    #[test]
    fn kernel_jacobian_matches_logistic_identity(p in 1e-3f64..0.999, k in -20.0f64..20.0) {
        // d arg / dp = arg (1 - arg) / (p (1 - p)).
        let (arg, jac) = rvt_kernel(p, k);
        let want = arg * (1.0 - arg) / (p * (1.0 - p));
        prop_assert!((jac - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn kernel_inverts_the_flow(p0 in 0.01f64..0.99, k in -10.0f64..10.0) {
        let p = rvt_kernel(p0, -k).0;
        prop_assume!(p > 1e-12 && p < 1.0 - 1e-12);
        prop_assert!((rvt_kernel(p, k).0 - p0).abs() < 1e-9);
    }

    #[test]
    fn growth_integral_is_linear_in_the_coordinates(
        xi in prop::collection::vec(-3.0f64..3.0, 4),
        eta in prop::collection::vec(-3.0f64..3.0, 4),
        a in -2.0f64..2.0,
        t in 0.0f64..1.5,
    ) {
        let process = KleProcess::wiener(1.5).unwrap();
        let mixed: Vec<f64> = xi.iter().zip(&eta).map(|(x, y)| a * x + y).collect();
        let lhs = process.k_n(t, &mixed).unwrap();
        let rhs = a * process.k_n(t, &xi).unwrap() + process.k_n(t, &eta).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn densities_are_nonnegative(p in 0.001f64..0.999, t in 0.0f64..1.0, n in 1usize..4) {
        for problem in [example1::<f64>(n).unwrap(), example2::<f64>(n).unwrap()] {
            for path in [DensityPath::Collapsed, DensityPath::Tensor] {
                let f = problem.density(p, t, path).unwrap();
                prop_assert!(f >= 0.0 && f.is_finite());
            }
        }
    }

    #[test]
    fn initial_sampler_inverts_the_cdf(p in 0.1f64..0.9) {
        let law = InitialLaw::truncated_beta(7.0, 10.0, 0.1, 0.9).unwrap();
        let u = law.cdf(p);
        prop_assert!((0.0..=1.0).contains(&u));
        prop_assert!((law.sample(u) - p).abs() < 1e-9);
    }
}
