mod common;

use common::*;
use lie_reduce::exec::rng;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ring_axioms_hold(seed in any::<u64>()) {
        prop_assert_eq!(ring_axioms(&mut rng(seed)), Ok(()));
    }

    #[test]
    fn printed_expressions_reparse(seed in any::<u64>()) {
        prop_assert_eq!(parser_round_trip(&mut rng(seed)), Ok(()));
    }

    #[test]
    fn derivatives_commute_on_random_expressions(seed in any::<u64>()) {
        prop_assert_eq!(derivatives_commute(&mut rng(seed)), Ok(()));
    }

    #[test]
    fn taylor_derivatives_match_differences(seed in any::<u64>()) {
        if let Some(err) = ad_vs_fd(&mut rng(seed)).unwrap() {
            prop_assert!(err <= 1e-6, "relative error {err:e}");
        }
    }

    #[test]
    fn lambert_w_inverts_w_exp_w(seed in any::<u64>()) {
        let r = lambert_identity(&mut rng(seed)).unwrap();
        prop_assert!(r < 1e-13, "residual {r:e}");
    }

    #[test]
    fn brackets_satisfy_jacobi(seed in any::<u64>()) {
        prop_assert_eq!(jacobi(&mut rng(seed)), Ok(()));
    }

    #[test]
    fn linear_odes_have_vanishing_psi(seed in any::<u64>()) {
        prop_assert_eq!(linear_ode_psi(&mut rng(seed)), Ok(()));
    }
}
