//! Seeded generators for sparse ground-truth precision matrices, Gaussian
//! samples and edge-recovery scoring.
//!
//! All randomness comes from ChaCha20 seeded with a `u64`, so outputs are a
//! pure function of the parameters and the seed on every platform.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Matrix;

/// Name of the generator recorded in output metadata.
pub const RNG_NAME: &str = "ChaCha20";

/// Added to each row's absolute off-diagonal sum to make the diagonal
/// strictly dominant.
pub const DIAGONAL_MARGIN: f64 = 0.1;

/// Entries of the truth at or below this magnitude are not edges.
const SUPPORT_TOL: f64 = 1e-10;

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub precision: Matrix,
    pub covariance: Matrix,
    /// Upper-triangle support `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub seed: u64,
}

impl GroundTruth {
    /// Builds the truth from a precision matrix, inverting it and reading off
    /// its support.
    pub fn from_precision(precision: Matrix, seed: u64) -> Result<Self> {
        let covariance = Cholesky::new(precision.clone())
            .ok_or(Error::NotPositiveDefinite { instance: 0 })?
            .inverse();
        let edges = support(&precision, SUPPORT_TOL);
        Ok(GroundTruth {
            precision,
            covariance,
            edges,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.precision.nrows()
    }
}

/// Upper-triangle positions with `|m_ij| > tol`.
pub fn support(m: &Matrix, tol: f64) -> Vec<(usize, usize)> {
    let p = m.nrows();
    let mut out = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if m[(i, j)].abs() > tol {
                out.push((i, j));
            }
        }
    }
    out
}

/// Precision with the given weighted edges and diagonal
/// `sum_j |w_ij| + DIAGONAL_MARGIN`.
pub fn precision_from_edges(p: usize, edges: &[(usize, usize, f64)]) -> Matrix {
    let mut m = Matrix::zeros(p, p);
    for &(i, j, w) in edges {
        m[(i, j)] = w;
        m[(j, i)] = w;
    }
    for i in 0..p {
        let row: f64 = (0..p).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] = row + DIAGONAL_MARGIN;
    }
    m
}

fn check_common(p: usize, edge_probability: f64, weight_range: (f64, f64)) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!("p must be at least 2, got {p}")));
    }
    if !(edge_probability > 0.0 && edge_probability < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must lie in (0, 1), got {edge_probability}"
        )));
    }
    let (lo, hi) = weight_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight range needs 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// Erdős–Rényi edges over `i < j` in row-major order, each with a weight of
/// magnitude uniform in `weight_range` and random sign.
fn draw_edges(
    rng: &mut ChaCha20Rng,
    p: usize,
    edge_probability: f64,
    (lo, hi): (f64, f64),
) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.random::<f64>() < edge_probability {
                edges.push((i, j, draw_weight(rng, lo, hi)));
            }
        }
    }
    edges
}

fn draw_weight(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    let mag = lo + (hi - lo) * rng.random::<f64>();
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Random sparse SPD precision on an Erdős–Rényi graph, made SPD by strict
/// diagonal dominance.
pub fn generate_precision(
    p: usize,
    edge_probability: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<GroundTruth> {
    check_common(p, edge_probability, weight_range)?;
    let mut rng = rng_from_seed(seed);
    let edges = draw_edges(&mut rng, p, edge_probability, weight_range);
    GroundTruth::from_precision(precision_from_edges(p, &edges), seed)
}

/// Draws `n` zero-mean Gaussian vectors with covariance `truth.covariance`
/// and returns their covariance with `1/n` normalization.
pub fn sample_covariance(truth: &GroundTruth, n: usize, seed: u64) -> Result<Matrix> {
    sample_covariance_from(&truth.covariance, n, seed)
}

pub fn sample_covariance_from(sigma: &Matrix, n: usize, seed: u64) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let p = sigma.nrows();
    let factor = Cholesky::new(sigma.clone())
        .ok_or(Error::NotPositiveDefinite { instance: 0 })?
        .l();
    let mut rng = rng_from_seed(seed);
    let mut z = Matrix::zeros(n, p);
    for r in 0..n {
        for c in 0..p {
            z[(r, c)] = rng.sample(StandardNormal);
        }
    }
    let x = z * factor.transpose();
    let mut s = x.transpose() * &x;
    s /= n as f64;
    crate::types::symmetrize(&mut s);
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Edge-recovery scores of `theta` against the true support.
/// Precision is 1 with no predicted edges; recall is 1 with no true edges.
pub fn recovery_metrics(truth: &GroundTruth, theta: &Matrix, tol: f64) -> RecoveryMetrics {
    support_metrics(&truth.edges, theta, tol)
}

pub fn support_metrics(true_edges: &[(usize, usize)], theta: &Matrix, tol: f64) -> RecoveryMetrics {
    let predicted = support(theta, tol);
    let truth: std::collections::HashSet<_> = true_edges.iter().copied().collect();
    let hits = predicted.iter().filter(|e| truth.contains(e)).count() as f64;
    let precision = if predicted.is_empty() {
        1.0
    } else {
        hits / predicted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RecoveryMetrics {
        precision,
        recall,
        f1,
    }
}

/// Parameters of a sparse graph observed with hidden confounders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentParams {
    pub p: usize,
    pub hidden: usize,
    pub edge_probability: f64,
    pub weight_range: (f64, f64),
    /// Probability that a hidden variable is linked to a given observed one.
    pub latent_probability: f64,
    pub latent_weight_range: (f64, f64),
}

/// Known sparse-plus-low-rank decomposition of an observed precision.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGroundTruth {
    /// Joint `(p + h)`-dimensional model, observed variables first.
    pub full: GroundTruth,
    /// Conditional (sparse) part `Theta_OO`.
    pub sparse: Matrix,
    /// `Theta_OH Theta_HH^{-1} Theta_HO`, positive semidefinite of rank at most `h`.
    pub lowrank: Matrix,
    /// Marginal model of the observed variables; its precision is `sparse - lowrank`.
    pub observed: GroundTruth,
    /// Upper-triangle support of `sparse`.
    pub sparse_edges: Vec<(usize, usize)>,
}

/// Builds a joint model with `hidden` latent variables and marginalizes them
/// out through the Schur complement.
///
/// Hidden variables have unit precision and no edges among themselves. The
/// observed diagonal is set to its off-diagonal absolute row sum plus the
/// absolute row sum of `Theta_OH Theta_HO` plus the usual margin, so the
/// marginal precision stays strictly diagonally dominant.
pub fn generate_latent(params: &LatentParams, seed: u64) -> Result<LatentGroundTruth> {
    let LatentParams {
        p,
        hidden,
        edge_probability,
        weight_range,
        latent_probability,
        latent_weight_range,
    } = *params;
    check_common(p, edge_probability, weight_range)?;
    if hidden == 0 {
        return Err(Error::InvalidParameter("need at least one hidden variable".into()));
    }
    if !(latent_probability > 0.0 && latent_probability <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "latent probability must lie in (0, 1], got {latent_probability}"
        )));
    }
    let (llo, lhi) = latent_weight_range;
    if !(llo > 0.0 && llo <= lhi && lhi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "latent weight range needs 0 < lo <= hi, got ({llo}, {lhi})"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let obs_edges = draw_edges(&mut rng, p, edge_probability, weight_range);
    let mut links = Matrix::zeros(p, hidden);
    for h in 0..hidden {
        for i in 0..p {
            if rng.random::<f64>() < latent_probability {
                links[(i, h)] = draw_weight(&mut rng, llo, lhi);
            }
        }
    }
    let lowrank = &links * links.transpose();

    let mut sparse = Matrix::zeros(p, p);
    for &(i, j, w) in &obs_edges {
        sparse[(i, j)] = w;
        sparse[(j, i)] = w;
    }
    for i in 0..p {
        let row: f64 = (0..p).filter(|&j| j != i).map(|j| sparse[(i, j)].abs()).sum();
        let lr: f64 = (0..p).map(|j| lowrank[(i, j)].abs()).sum();
        sparse[(i, i)] = row + lr + DIAGONAL_MARGIN;
    }

    let n = p + hidden;
    let mut joint = Matrix::zeros(n, n);
    joint.view_mut((0, 0), (p, p)).copy_from(&sparse);
    joint.view_mut((0, p), (p, hidden)).copy_from(&links);
    joint.view_mut((p, 0), (hidden, p)).copy_from(&links.transpose());
    for h in 0..hidden {
        joint[(p + h, p + h)] = 1.0;
    }

    let full = GroundTruth::from_precision(joint, seed)?;
    let observed = GroundTruth::from_precision(&sparse - &lowrank, seed)?;
    let sparse_edges = support(&sparse, SUPPORT_TOL);
    Ok(LatentGroundTruth {
        full,
        sparse,
        lowrank,
        observed,
        sparse_edges,
    })
}
