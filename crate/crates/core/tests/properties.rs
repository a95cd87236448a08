mod common;

use std::f64::consts::LN_2;
use std::sync::Arc;

use causal_geometry::channels::Domain;
use causal_geometry::ei::QuadratureSpec;
use causal_geometry::manifold::Submanifold;
use causal_geometry::map::FnMap;
use causal_geometry::models::*;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn ok(c: Check) -> std::result::Result<(), TestCaseError> {
    c.map_err(TestCaseError::fail)
}

proptest! {
    #[test]
    fn mismatch_eigenvalue_identity(case in spd_pair()) {
        ok(mismatch_matches_eigenvalues(case))?;
    }

    #[test]
    fn pullback_linearity(case in pullback_case()) {
        ok(pullback_is_linear(case))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decomposition_exactness(eps in 0.005..0.2f64, delta in 0.005..0.2f64) {
        ok(decomposition_is_exact((eps, delta)))?;
    }

    #[test]
    fn seeded_mc_is_bitwise_reproducible(seed in any::<u64>()) {
        ok(mc_is_deterministic(seed))?;
    }

    #[test]
    fn geometric_grid_doubling(eps in 0.01..0.1f64, delta in 0.01..0.1f64) {
        ok(geometric_grid_converges((eps, delta)))?;
    }

    #[test]
    fn coarse_ei_reparameterization_invariance(k in -3.0..3.0f64, err in 0.01..0.1f64) {
        prop_assume!(k.abs() > 1e-3);
        ok(coarse_ei_is_invariant((k, err)))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn exact_grid_doubling(err in 0.03..0.1f64) {
        ok(exact_grid_converges(err))?;
    }
}

#[test]
fn squared_coordinate_leaves_coarse_ei_unchanged() {
    let m = two_species_model(&TwoSpeciesConfig::default()).unwrap();
    let embed = FnMap::new(1, 2, |u| vec![u[0] * u[0]; 2])
        .with_jacobian(|u| DMatrix::from_element(2, 1, 2.0 * u[0]));
    let squared = Submanifold::new(Arc::new(embed), Domain::unit(1), "A2").unwrap();
    let grid = QuadratureSpec {
        nodes_per_axis: 1001,
        ..QuadratureSpec::geometric()
    };
    let a = m.coarse_ei(&submanifold_a(), &grid).unwrap().nats;
    let b = m.coarse_ei(&squared, &grid).unwrap().nats;
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn doubling_both_errors_costs_d_ln_2() {
    let grid = QuadratureSpec::geometric();
    let at = |e: f64| two_species_model(&TwoSpeciesConfig { epsilon: e, delta: e, ..Default::default() }).unwrap();
    for e in [1e-3, 1e-2, 0.05] {
        let (m1, m2) = (at(e), at(2.0 * e));
        let full = m2.ei_geometric(&grid).unwrap().nats - m1.ei_geometric(&grid).unwrap().nats;
        let sub = m2.coarse_ei(&submanifold_a(), &grid).unwrap().nats - m1.coarse_ei(&submanifold_a(), &grid).unwrap().nats;
        assert!((full + 2.0 * LN_2).abs() < 1e-3, "{e}: {full}");
        assert!((sub + LN_2).abs() < 1e-3, "{e}: {sub}");
    }
}
