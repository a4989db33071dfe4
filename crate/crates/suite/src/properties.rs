//! Randomized invariants of the numerical building blocks.

use crate::*;
use proptest::prelude::*;

fn unit6() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(0.0f64..1.0)
}

fn ok_within(ck: Check, tol: f64) -> Result<(), TestCaseError> {
    match ck {
        Check::Ok(v) => {
            prop_assert!(v <= tol, "error {v:e} above {tol:e}");
            Ok(())
        }
        Check::Skip => Err(TestCaseError::reject("instance outside the method's domain")),
        Check::Bad(m) => Err(TestCaseError::fail(m)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, max_global_rejects: 2000, ..ProptestConfig::default() })]

    #[test]
    fn spectral_factor_identity(u in unit6()) {
        let (w1, w2, level) = weights_from(&u);
        ok_within(spectral_identity(&w1, &w2, level), 1e-8)?;
    }

    #[test]
    fn interpolation_residuals_small(u in unit6()) {
        let (p, w, level, a) = problem_from(&u);
        ok_within(interpolation_residual(&p, &w, level, a), 1e-8)?;
    }

    #[test]
    fn nevanlinna_pick_residuals(u in unit6()) {
        let (z, wz, x, wx) = pick_from(&u);
        ok_within(np_residual(z, wz, x, wx), 1e-8)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, max_global_rejects: 2000, ..ProptestConfig::default() })]

    #[test]
    fn mirror_is_an_involution(u in unit6()) {
        prop_assert!(mirror_involution(&rational_from(&u)) <= 1e-12);
    }

    #[test]
    fn relative_degree_adds(u in unit6(), v in unit6()) {
        prop_assert!(phi_additive(&rational_from(&u), &rational_from(&v)));
    }

    #[test]
    fn inner_functions_have_unit_modulus(u in unit6(), h in 0.0f64..3.0) {
        prop_assert!(inner_modulus(&rhp_roots_from(&u), h) <= 1e-10);
    }

    #[test]
    fn argument_principle_matches_polynomial_roots(u in prop::array::uniform12(0.0f64..1.0)) {
        ok_within(argument_principle(&poly_roots_from(&u)), 1e-6)?;
    }

    #[test]
    fn scalar_pick_threshold_is_modulus(x in -0.9f64..0.9, w in 0.05f64..100.0, neg in any::<bool>()) {
        let w = if neg { -w } else { w };
        let (mu, at, below) = pick_scalar(c(x, 0.0), w);
        prop_assert_eq!(mu, w.abs());
        prop_assert!(at && !below);
    }
}
