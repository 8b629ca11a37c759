//! Cross-module invariants: solver, analytic bounds and dense oracle.

use proptest::prelude::*;

use werner_ree::certificates::{analytic_bracket, extract_dual, finite_upper, trial_regime2};
use werner_ree::dense::{relative_entropy_dense, typeclass_to_dense, werner_power};
use werner_ree::solver::{build_problem, solve, ToleranceSet};
use werner_ree::werner::asymptotic_ree;
use werner_ree::WernerParams;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_value_is_bracketed(d in 2usize..8, p in 0.51f64..1.0, n in 1usize..7) {
        let params = WernerParams::new(d, p).unwrap();
        let tol = ToleranceSet::default();
        let problem = build_problem(params, n).unwrap();
        let mut sol = solve(&problem, &tol).unwrap();
        let dual = extract_dual(&problem, &mut sol, &tol).unwrap();
        let b = analytic_bracket(&params, n).unwrap();
        prop_assert!(b.lower <= sol.value + 1e-9);
        prop_assert!(sol.value <= b.upper + 1e-9);
        prop_assert!(dual.g <= sol.value + 1e-12);
        prop_assert!(asymptotic_ree(&params) <= sol.value + 1e-9);
    }

    #[test]
    fn solver_optimum_matches_dense_relative_entropy(p in 0.55f64..1.0, d in 2usize..4) {
        let params = WernerParams::new(d, p).unwrap();
        let tol = ToleranceSet::default();
        let sol = solve(&build_problem(params, 2).unwrap(), &tol).unwrap();
        let eta = typeclass_to_dense(&sol.chi_vector(), &params, 2).unwrap();
        prop_assert!(eta.min_pt_eigenvalue().unwrap() >= -1e-12);
        let dense = relative_entropy_dense(&werner_power(&params, 2).unwrap(), &eta).unwrap() / 2.0;
        prop_assert!((dense - sol.value).abs() < 1e-8);
    }
}

#[test]
fn two_profile_trial_approaches_the_limit() {
    let params = WernerParams::new(3, 0.9).unwrap();
    let limit = asymptotic_ree(&params);
    let at = |n| finite_upper(&trial_regime2(&params, n).unwrap(), &params) - limit;
    assert!(at(1000) < at(100));
    assert!(at(100) < at(10));
    assert!(at(100_000) < 1e-4);
}
