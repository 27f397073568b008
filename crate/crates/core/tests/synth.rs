use gglopt::nalgebra::Cholesky;
use gglopt::prox::numerical_rank;
use gglopt::synth::{
    generate_latent, generate_precision, precision_from_edges, recovery_metrics,
    sample_covariance, LatentParams,
};
use gglopt::Matrix;

#[test]
fn precision_is_spd_for_many_seeds() {
    for p in [5usize, 20, 50] {
        for seed in 0..1000u64 {
            let t = generate_precision(p, 0.3, (0.2, 0.9), seed).unwrap();
            assert!(Cholesky::new(t.precision.clone()).is_some(), "p={p} seed={seed}");
            assert_eq!(t.precision, t.precision.transpose());
        }
    }
}

#[test]
fn support_equals_drawn_edges() {
    let t = generate_precision(15, 0.3, (0.2, 0.5), 4).unwrap();
    for i in 0..15 {
        for j in (i + 1)..15 {
            let on = t.precision[(i, j)] != 0.0;
            assert_eq!(on, t.edges.contains(&(i, j)));
            if on {
                let w = t.precision[(i, j)].abs();
                assert!((0.2..=0.5).contains(&w));
            }
        }
    }
}

#[test]
fn diagonal_rule_by_hand() {
    let m = precision_from_edges(2, &[(0, 1, 0.5)]);
    assert_eq!(m, Matrix::from_row_slice(2, 2, &[0.6, 0.5, 0.5, 0.6]));
}

#[test]
fn edge_count_is_binomial() {
    // 2000 Bernoulli(0.1) trials: mean 200, sd about 13.4
    let t = generate_precision(64, 0.1, (0.2, 0.5), 77).unwrap();
    let trials = 64 * 63 / 2;
    let mean = trials as f64 * 0.1;
    let sd = (trials as f64 * 0.1 * 0.9).sqrt();
    assert!((t.edges.len() as f64 - mean).abs() <= 4.0 * sd);
}

#[test]
fn same_seed_same_draws() {
    let a = generate_precision(10, 0.3, (0.2, 0.5), 5).unwrap();
    let b = generate_precision(10, 0.3, (0.2, 0.5), 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(sample_covariance(&a, 30, 1).unwrap(), sample_covariance(&b, 30, 1).unwrap());
    assert_ne!(sample_covariance(&a, 30, 1).unwrap(), sample_covariance(&a, 30, 2).unwrap());
}

#[test]
fn sample_covariance_converges() {
    let t = generate_precision(6, 0.4, (0.2, 0.5), 3).unwrap();
    let err = |n: usize| (sample_covariance(&t, n, 9).unwrap() - &t.covariance).amax();
    let small = err(200);
    let large = err(200_000);
    assert!(large < small);
    assert!(large < 0.05 * t.covariance.amax());
}

#[test]
fn sample_covariance_is_unbiased() {
    let t = generate_precision(5, 0.4, (0.2, 0.5), 8).unwrap();
    let n = 50;
    let reps = 200;
    let mut mean = Matrix::zeros(5, 5);
    for seed in 0..reps {
        mean += sample_covariance(&t, n, 1000 + seed).unwrap();
    }
    mean /= reps as f64;
    // entrywise standard error of the mean of n * reps products
    for i in 0..5 {
        for j in 0..5 {
            let sigma = &t.covariance;
            let var = sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2);
            let se = (var / (n * reps as usize) as f64).sqrt();
            assert!((mean[(i, j)] - sigma[(i, j)]).abs() <= 5.0 * se, "({i},{j})");
        }
    }
}

#[test]
fn fewer_samples_than_variables_is_rank_deficient() {
    let t = generate_precision(20, 0.2, (0.2, 0.5), 1).unwrap();
    let s = sample_covariance(&t, 7, 2).unwrap();
    assert_eq!(numerical_rank(&s), 7);
    assert!(sample_covariance(&t, 1, 2).is_err());
}

#[test]
fn recovery_of_the_truth_is_perfect() {
    let t = generate_precision(12, 0.3, (0.2, 0.5), 2).unwrap();
    let m = recovery_metrics(&t, &t.precision, 1e-10);
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    let m = recovery_metrics(&t, &Matrix::identity(12, 12), 1e-10);
    assert_eq!(m.precision, 1.0);
    assert_eq!(m.f1, 0.0);
}

#[test]
fn latent_model_marginalizes_consistently() {
    let params = LatentParams {
        p: 15,
        hidden: 2,
        edge_probability: 0.2,
        weight_range: (0.2, 0.5),
        latent_probability: 0.6,
        latent_weight_range: (0.2, 0.5),
    };
    let t = generate_latent(&params, 3).unwrap();
    assert!(numerical_rank(&t.lowrank) <= 2);
    let marginal = t.full.covariance.view((0, 0), (15, 15)).clone_owned();
    let precision = marginal.try_inverse().unwrap();
    assert!((&precision - (&t.sparse - &t.lowrank)).amax() <= 1e-10);
    assert!((&t.observed.precision - &precision).amax() <= 1e-10);
    assert!(Cholesky::new(t.sparse.clone() - &t.lowrank).is_some());

    let bad = LatentParams { hidden: 0, ..params };
    assert!(generate_latent(&bad, 3).is_err());
}

#[test]
fn invalid_parameters() {
    assert!(generate_precision(1, 0.5, (0.2, 0.5), 0).is_err());
    assert!(generate_precision(5, 1.0, (0.2, 0.5), 0).is_err());
    assert!(generate_precision(5, 0.5, (0.5, 0.2), 0).is_err());
}
