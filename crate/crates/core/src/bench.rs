//! Full versus blockwise single graphical lasso on synthetic sparse networks.
//!
//! Each instance is the sample correlation matrix of draws from a random
//! sparse precision, so `lambda1` is on the correlation scale for every `p`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::admm::{kkt_residual, solve_sgl};
use crate::block::{connected_components, solve_sgl_blockwise, threshold_graph};
use crate::error::{Error, Result};
use crate::selection::scale_to_correlation;
use crate::synth::{generate_precision, sample_covariance};
use crate::types::{CovInput, PenaltySpec, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceLevel {
    pub label: &'static str,
    pub eps_abs: f64,
    pub eps_rel: f64,
}

pub const LOW_ACCURACY: ToleranceLevel = ToleranceLevel {
    label: "low",
    eps_abs: 1e-5,
    eps_rel: 1e-3,
};

pub const HIGH_ACCURACY: ToleranceLevel = ToleranceLevel {
    label: "high",
    eps_abs: 1e-7,
    eps_rel: 1e-5,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkParams {
    pub sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub edge_probability_scale: f64,
    pub weight_range: (f64, f64),
    /// Samples drawn per instance, as a multiple of `p`.
    pub samples_per_dim: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            sizes: vec![200, 500],
            lambdas: vec![0.2, 0.5],
            edge_probability_scale: 1.0,
            weight_range: (0.2, 0.4),
            samples_per_dim: 2,
            max_iter: 1000,
            seed: 1,
        }
    }
}

impl BenchmarkParams {
    /// Erdős–Rényi edge probability `edge_probability_scale / p`, which keeps
    /// the expected degree fixed as `p` grows.
    pub fn edge_probability(&self, p: usize) -> f64 {
        (self.edge_probability_scale / p as f64).min(0.999)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.sizes.is_empty() || self.sizes.iter().any(|&p| p < 2) {
            return bad("sizes must be nonempty and each at least 2");
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return bad("lambdas must be nonempty, finite and nonnegative");
        }
        if !(self.edge_probability_scale > 0.0 && self.edge_probability_scale.is_finite()) {
            return bad("edge probability scale must be positive");
        }
        if self.samples_per_dim == 0 || self.max_iter == 0 {
            return bad("samples per dimension and max_iter must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub p: usize,
    pub lambda1: f64,
    pub tolerance: String,
    pub components: usize,
    pub largest_component: usize,
    pub full_seconds: f64,
    pub block_seconds: f64,
    pub speedup: f64,
    pub full_kkt: f64,
    pub block_kkt: f64,
    pub full_converged: bool,
    pub block_converged: bool,
}

impl BenchmarkRow {
    /// Largest component at most a tenth of the variables.
    pub fn fragmented(&self) -> bool {
        self.largest_component * 10 <= self.p
    }
}

/// Runs the sweep; one row per `(p, lambda1, tolerance level)`.
pub fn run_benchmark(params: &BenchmarkParams) -> Result<Vec<BenchmarkRow>> {
    params.validate()?;
    let mut rows = Vec::new();
    for &p in &params.sizes {
        let truth = generate_precision(
            p,
            params.edge_probability(p),
            params.weight_range,
            params.seed,
        )?;
        let n = params.samples_per_dim * p;
        let (s, _) = scale_to_correlation(&sample_covariance(&truth, n, params.seed.wrapping_add(1))?)?;
        let cov = CovInput::single(s.clone(), n);
        for &lambda1 in &params.lambdas {
            let partition = connected_components(&threshold_graph(&s, lambda1));
            let pen = PenaltySpec::sgl(lambda1);
            for level in [LOW_ACCURACY, HIGH_ACCURACY] {
                let cfg = SolverConfig {
                    eps_abs: level.eps_abs,
                    eps_rel: level.eps_rel,
                    max_iter: params.max_iter,
                    ..SolverConfig::default()
                };
                let full = solve_sgl(&s, n, lambda1, &cfg)?;
                let block = solve_sgl_blockwise(&s, n, lambda1, &cfg)?;
                let full_seconds = full.diagnostics.wall_time_seconds;
                let block_seconds = block.diagnostics.wall_time_seconds;
                rows.push(BenchmarkRow {
                    p,
                    lambda1,
                    tolerance: level.label.to_string(),
                    components: partition.component_count,
                    largest_component: partition.largest(),
                    full_seconds,
                    block_seconds,
                    speedup: full_seconds / block_seconds.max(1e-12),
                    full_kkt: kkt_residual(&cov, &pen, &full)?,
                    block_kkt: kkt_residual(&cov, &pen, &block)?,
                    full_converged: full.diagnostics.converged,
                    block_converged: block.diagnostics.converged,
                });
            }
        }
    }
    Ok(rows)
}

pub const TABLE_HEADER: &str = "p\tlambda1\ttolerance\tcomponents\tlargest_component\tfull_seconds\tblock_seconds\tspeedup\tfull_kkt\tblock_kkt\tfull_converged\tblock_converged";

pub fn format_table(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.3}\t{:.3e}\t{:.3e}\t{}\t{}",
            r.p,
            r.lambda1,
            r.tolerance,
            r.components,
            r.largest_component,
            r.full_seconds,
            r.block_seconds,
            r.speedup,
            r.full_kkt,
            r.block_kkt,
            r.full_converged,
            r.block_converged
        )
        .unwrap();
    }
    out
}
