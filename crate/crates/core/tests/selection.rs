use gglopt::selection::{
    default_lambda2_grid, default_lambda_grid, default_mu1_grid, edge_count, lambda_max,
    log_spaced,
};
use gglopt::synth::{generate_precision, sample_covariance};
use gglopt::{ebic, ebic_latent, grid_search, CovInput, Error, Family, Matrix, ParameterGrid, SolverConfig};

fn instance(p: usize, n: usize, seed: u64) -> CovInput {
    let truth = generate_precision(p, 0.2, (0.2, 0.5), seed).unwrap();
    CovInput::single(sample_covariance(&truth, n, seed + 1).unwrap(), n)
}

#[test]
fn larger_gamma_never_selects_more_edges() {
    for seed in 0..5 {
        let cov = instance(12, 200, 40 + seed);
        let lambdas = default_lambda_grid(&cov, 10).unwrap();
        let pick = |gamma: f64| {
            let grid = ParameterGrid {
                gamma,
                ..ParameterGrid::new(lambdas.clone())
            };
            let report = grid_search(&cov, Family::Sgl, &grid, &SolverConfig::default()).unwrap();
            report.best_entry().edges[0]
        };
        assert!(pick(1.0) <= pick(0.0), "seed {seed}");
    }
}

#[test]
fn ebic_is_nondecreasing_in_gamma() {
    let cov = instance(10, 300, 3);
    let theta = vec![cov.matrices()[0].clone().try_inverse().unwrap()];
    let mut last = f64::NEG_INFINITY;
    for i in 0..=20 {
        let v = ebic(&cov, &theta, i as f64 / 20.0).unwrap();
        assert!(v >= last);
        last = v;
    }
}

#[test]
fn ebic_rejects_indefinite_estimates() {
    let cov = instance(4, 50, 9);
    let bad = vec![-Matrix::identity(4, 4)];
    assert!(matches!(ebic(&cov, &bad, 0.5), Err(Error::NotPositiveDefinite { .. })));
}

#[test]
fn zero_lowrank_reduces_to_plain_ebic() {
    let cov = instance(6, 100, 11);
    let theta = vec![Matrix::identity(6, 6)];
    let zero = vec![Matrix::zeros(6, 6)];
    assert_eq!(
        ebic_latent(&cov, &theta, &zero, 0.5).unwrap(),
        ebic(&cov, &theta, 0.5).unwrap()
    );
}

#[test]
fn report_is_reproducible_and_ordered() {
    let mats: Vec<Matrix> = (0..2).map(|k| instance(8, 150, 20 + k).matrices()[0].clone()).collect();
    let cov = CovInput::new(mats, vec![150, 150]);
    let grid = ParameterGrid {
        lambda1_values: default_lambda_grid(&cov, 4).unwrap(),
        lambda2_values: default_lambda2_grid(&cov, 2).unwrap(),
        mu1_values: Vec::new(),
        gamma: 0.5,
    };
    let a = grid_search(&cov, Family::Ggl, &grid, &SolverConfig::default()).unwrap();
    let b = grid_search(&cov, Family::Ggl, &grid, &SolverConfig::default()).unwrap();
    assert_eq!(a.entries, b.entries);
    assert_eq!(a.solution, b.solution.clone_with_time(a.solution.diagnostics.wall_time_seconds));
    assert_eq!(a.entries.len(), 8);
    // lambda1-major, lambda2 ascending within
    for pair in a.entries.chunks(2) {
        assert_eq!(pair[0].lambda1, pair[1].lambda1);
        assert!(pair[0].lambda2.unwrap() < pair[1].lambda2.unwrap());
    }
    assert_eq!(a.best_entry().edges.len(), 2);
}

trait CloneWithTime {
    fn clone_with_time(self, t: f64) -> Self;
}

impl CloneWithTime for gglopt::Solution {
    fn clone_with_time(mut self, t: f64) -> Self {
        self.diagnostics.wall_time_seconds = t;
        self
    }
}

#[test]
fn invalid_grids_are_rejected() {
    let cov = instance(5, 100, 2);
    let cfg = SolverConfig::default();
    let ascending = ParameterGrid::new(vec![0.1, 0.2]);
    assert!(matches!(grid_search(&cov, Family::Sgl, &ascending, &cfg), Err(Error::InvalidParameter(_))));
    let empty = ParameterGrid::new(Vec::new());
    assert!(grid_search(&cov, Family::Sgl, &empty, &cfg).is_err());
    let no_l2 = ParameterGrid::new(vec![0.2, 0.1]);
    assert!(grid_search(&cov, Family::Ggl, &no_l2, &cfg).is_err());
    let gamma = ParameterGrid {
        gamma: 1.5,
        ..ParameterGrid::new(vec![0.2, 0.1])
    };
    assert!(grid_search(&cov, Family::Sgl, &gamma, &cfg).is_err());
}

#[test]
fn default_grids_span_from_lambda_max() {
    let cov = instance(8, 100, 5);
    let top = lambda_max(&cov);
    let g = default_lambda_grid(&cov, 6).unwrap();
    assert_eq!(g.len(), 6);
    assert!((g[0] - top).abs() <= 1e-12 * top);
    assert!(g.windows(2).all(|w| w[1] < w[0]));
    let mu = default_mu1_grid(&cov, 4).unwrap();
    assert!((mu[3] - top / 10.0).abs() <= 1e-12 * top);
    let l2 = default_lambda2_grid(&cov, 3).unwrap();
    assert!((l2[2] - top / 1000.0).abs() <= 1e-12 * top);
    assert!(default_mu1_grid(&cov, 1).is_err());
    let ls = log_spaced(1.0, 0.01, 3);
    assert!((ls[1] - 0.1).abs() < 1e-15);
}

#[test]
fn selected_solution_at_lambda_max_is_empty() {
    let cov = instance(6, 100, 6);
    let top = lambda_max(&cov);
    let grid = ParameterGrid::new(vec![top * 1.5, top]);
    let report = grid_search(&cov, Family::Sgl, &grid, &SolverConfig::default()).unwrap();
    assert!(report.entries.iter().all(|e| e.edges == vec![0]));
    // tie broken towards the larger lambda1
    assert_eq!(report.best, 0);
    assert_eq!(edge_count(&report.solution.theta[0]), 0);
}
