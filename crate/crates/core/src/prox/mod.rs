//! Proximal operators used by the ADMM solvers.
//!
//! Scalar and vector operators act on one off-diagonal position at a time
//! (a `K`-vector collecting that entry across instances); the matrix operators
//! work through a symmetric eigendecomposition.

mod eigen;
mod tv;

pub use eigen::{numerical_rank, EigenDecomposition, RANK_TOL};
pub use tv::prox_tv_1d;

use nalgebra::DMatrix;

/// `sign(x) * max(|x| - tau, 0)`.
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Prox of `tau * ||.||_2`: shrinks `v` radially, to zero when `||v|| <= tau`.
pub fn group_soft_threshold(v: &[f64], tau: f64) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= tau {
        return vec![0.0; v.len()];
    }
    let scale = 1.0 - tau / norm;
    v.iter().map(|x| x * scale).collect()
}

/// Prox of `l1 * ||.||_1 + l2 * ||.||_2`: elementwise shrink, then group shrink.
pub fn prox_sparse_group(v: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let shrunk: Vec<f64> = v.iter().map(|&x| soft_threshold(x, l1)).collect();
    group_soft_threshold(&shrunk, l2)
}

/// Prox of `l1 * ||.||_1 + l2 * sum_k |x_k - x_{k-1}|`: fuse first, then shrink.
pub fn prox_fused_l1(v: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    prox_tv_1d(v, l2)
        .into_iter()
        .map(|x| soft_threshold(x, l1))
        .collect()
}

/// Positive root of `x^2 - d x - beta = 0`, i.e. `(d + sqrt(d^2 + 4 beta)) / 2`,
/// written to avoid cancellation when `d` is very negative.
#[inline]
fn log_barrier_root(d: f64, beta: f64) -> f64 {
    let r = (d * d + 4.0 * beta).sqrt();
    if d >= 0.0 {
        0.5 * (d + r)
    } else {
        2.0 * beta / (r - d)
    }
}

/// `argmin_X -beta * log det X + 1/2 ||X - A||_F^2`.
///
/// The weight multiplies the log-det term. An ADMM step minimizing
/// `-log det X + rho/2 ||X - A||^2` therefore calls this with `beta = 1/rho`,
/// not `rho`.
pub fn prox_log_det(a: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    EigenDecomposition::new(a).map(|d| log_barrier_root(d, beta))
}

/// Joint prox of `tau * ||.||_*` and the PSD indicator: eigenvalues shrunk by
/// `tau` and clipped at zero.
pub fn prox_nuclear_psd(a: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    EigenDecomposition::new(a).map(|d| (d - tau).max(0.0))
}
