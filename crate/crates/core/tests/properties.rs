mod common;

use common::props::*;
use corrugated_core::geometry::BaseDomain;
use corrugated_core::mesh::{mesh_perturbed_domain, mesh_rectangle, MeshOptions};
use corrugated_core::geometry::{build_perturbed_domain, exponents_to_params};
use corrugated_core::{EigSolveOptions, LimitSolver, ShapeSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(HAUSDORFF_CASES))]

    #[test]
    fn hausdorff_is_a_metric(sets in three_sets()) {
        check_hausdorff_axioms(sets)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn perturbed_domain_area_is_conserved(e in admissible_exponents()) {
        check_area_conservation(e)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn robin_curves_decrease_on_random_grids(mut grid in prop::collection::vec(-20.0f64..20.0, MU_GRID)) {
        grid.sort_by(f64::total_cmp);
        let mesh = mesh_rectangle(&BaseDomain::unit_square(), 1.0 / 12.0).unwrap();
        let solver = LimitSolver::new(&mesh, EigSolveOptions::default()).unwrap();
        robin_monotonicity(&solver, &grid, ROBIN_MODES, 1e-9).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn robin_curves_decrease_on_a_perturbed_domain() {
    let p = exponents_to_params(0.25, 2.0, -1.0).unwrap();
    let dom = build_perturbed_domain(&BaseDomain::unit_square(), &p, &ShapeSpec::canonical()).unwrap();
    let mesh = mesh_perturbed_domain(&dom, &MeshOptions::new(1.0 / 16.0)).unwrap();
    let solver = LimitSolver::new(&mesh, EigSolveOptions::default()).unwrap();
    let worst = robin_monotonicity(&solver, &mu_grid(-30.0, 30.0), ROBIN_MODES, 1e-9).unwrap();
    assert!(worst <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn q_eps_is_constant_when_alpha_is_beta_plus_three(beta in -1.0f64..1.5) {
        use corrugated_core::geometry::compute_scaling;
        let (base, shape) = (BaseDomain::unit_square(), ShapeSpec::canonical());
        let q = |eps: f64| compute_scaling(&exponents_to_params(eps, beta + 3.0, beta).unwrap(), &shape, &base).q_eps;
        let q0 = q(0.125);
        for k in 4..=8 {
            prop_assert!((q(0.5f64.powi(k)) - q0).abs() <= 1e-12 * q0);
        }
    }

    #[test]
    fn threshold_bound_grows_with_q_and_shrinks_with_length(
        q in 0.01f64..50.0, dq in 0.001f64..5.0, h in 0.001f64..0.5, dh in 0.001f64..0.5,
    ) {
        use corrugated_core::analysis::threshold_bound;
        use corrugated_core::geometry::ScalingNumbers;
        let scaling = |q_eps| ScalingNumbers { q_eps, r_eps: 0.25, capacity: 1.0, room_count: 1, total_room_mass: 1.0 };
        let params = |h| corrugated_core::PerturbationParams { eps: 0.1, b: 0.1, d: 0.01, h, rho: 1.0 };
        prop_assert!(threshold_bound(&scaling(q + dq), &params(h)) > threshold_bound(&scaling(q), &params(h)));
        prop_assert!(threshold_bound(&scaling(q), &params(h + dh)) < threshold_bound(&scaling(q), &params(h)));
    }
}
