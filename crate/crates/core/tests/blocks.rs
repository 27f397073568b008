mod common;

use common::*;
use gglopt::{connected_components, solve_sgl, solve_sgl_blockwise, threshold_graph, Matrix, SolverConfig};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn components_match_union_find(seed in 0u64..100_000, lambda in 0.0f64..1.0) {
        let mut r = rng(seed);
        let p = r.random_range(1..25);
        let s = random_symmetric(&mut r, p, 1.0);
        let mut ours = connected_components(&threshold_graph(&s, lambda)).members();
        ours.sort();
        prop_assert_eq!(ours, union_find_components(&s, lambda));
    }
}

#[test]
fn threshold_is_strict() {
    let s = Matrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 1.0, -0.2, 0.0, -0.2, 1.0]);
    let part = connected_components(&threshold_graph(&s, 0.5));
    assert_eq!(part.labels, vec![0, 1, 2]);
    let part = connected_components(&threshold_graph(&s, 0.19));
    assert_eq!(part.component_count, 1);
    assert_eq!(part.largest(), 3);
}

#[test]
fn labels_follow_first_occurrence() {
    let mut s = Matrix::identity(5, 5);
    s[(1, 4)] = 0.9;
    s[(4, 1)] = 0.9;
    s[(0, 3)] = 0.8;
    s[(3, 0)] = 0.8;
    let part = connected_components(&threshold_graph(&s, 0.1));
    assert_eq!(part.labels, vec![0, 1, 2, 0, 1]);
    assert_eq!(part.component_sizes, vec![2, 2, 1]);
}

#[test]
fn blockwise_matches_full_on_a_fragmented_problem() {
    let mut r = rng(12);
    let s = random_fragmented(&mut r, 40, 6);
    let cfg = SolverConfig::default().tightened(1000.0);
    let full = solve_sgl(&s, 100, 0.02, &cfg).unwrap();
    let block = solve_sgl_blockwise(&s, 100, 0.02, &cfg).unwrap();
    assert!(block.diagnostics.converged);
    assert!((&full.theta[0] - &block.theta[0]).amax() <= 1e-5);
    let rel = (full.diagnostics.objective_value - block.diagnostics.objective_value).abs()
        / full.diagnostics.objective_value.abs();
    assert!(rel <= 1e-8);
}

#[test]
fn all_singletons_need_no_iterations() {
    let s = Matrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 4.0, 0.05, 0.0, 0.05, 0.5]);
    let sol = solve_sgl_blockwise(&s, 10, 0.2, &SolverConfig::default()).unwrap();
    assert_eq!(sol.diagnostics.iterations, 0);
    assert_eq!(sol.theta[0], Matrix::from_diagonal(&s.diagonal().map(|d| 1.0 / d)));
}
