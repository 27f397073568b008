//! Sparse inverse covariance estimation for one or several related Gaussian
//! datasets.
//!
//! The crate solves
//!
//! ```text
//! min  sum_k [ -log det(Theta_k - L_k) + <S_k, Theta_k - L_k> ] + P(Theta) + sum_k mu_k ||L_k||_*
//! ```
//!
//! for the single ([`Family::Sgl`]), group ([`Family::Ggl`]) and fused
//! ([`Family::Fgl`]) penalties, with or without low-rank latent components.
//! Problems are solved either at fixed regularization ([`solve`]) or by
//! grid search with the extended BIC ([`grid_search`]).
//!
//! ```
//! use gglopt::{solve, CovInput, Matrix, PenaltySpec, SolverConfig};
//!
//! let s = Matrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
//! let cov = CovInput::single(s, 100);
//! let sol = solve(&cov, &PenaltySpec::sgl(0.2), &SolverConfig::default()).unwrap();
//! assert!(sol.diagnostics.converged);
//! ```

pub mod admm;
pub mod bench;
pub mod block;
pub mod cli;
pub mod error;
pub mod io;
pub mod prox;
pub mod selection;
pub mod synth;
pub mod types;

pub use admm::{kkt_residual, solve_latent_sgl, solve_multi, solve_sgl, solve_with_state, AdmmState};
pub use block::{connected_components, solve_sgl_blockwise, threshold_graph, ComponentPartition};
pub use error::{Error, Result};
pub use selection::{
    default_lambda_grid, ebic, ebic_latent, grid_search, scale_to_correlation, GridEntry,
    ParameterGrid, SelectionReport,
};
pub use types::{
    objective, validate_input, CovInput, Family, Matrix, PenaltySpec, Solution, SolveDiagnostics,
    SolverConfig, Violation,
};

pub use nalgebra;

/// Solves at fixed regularization with the default solver for the problem:
/// the blockwise solver for the single family without latent variables, ADMM
/// otherwise.
pub fn solve(cov: &CovInput, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<Solution> {
    if pen.family == Family::Sgl && !pen.latent && cov.len() == 1 {
        cov.ensure_valid()?;
        return solve_sgl_blockwise(&cov.matrices()[0], cov.sample_counts()[0], pen.lambda1, cfg);
    }
    solve_multi(cov, pen, cfg)
}
