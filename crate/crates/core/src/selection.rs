//! Grid search over regularization parameters scored by the extended BIC.
//!
//! For `K` instances the score is summed over instances:
//!
//! ```text
//! eBIC = sum_k N_k (tr(S_k Theta_k) - log det Theta_k) + E_k log N_k + 4 E_k gamma log p
//! ```
//!
//! with `E_k` the number of edges (upper-triangle nonzeros) of `Theta_k`. In
//! the latent case the likelihood term uses `Theta_k - L_k`, edges are
//! counted on the sparse `Theta_k`, and the free parameters of each `L_k` are
//! added to the edge count (see [`ebic_latent`]).

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{check_problem, run, AdmmState};
use crate::error::{Error, Result};
use crate::prox::numerical_rank;
use crate::types::{
    log_det_pd, objective, trace_product, CovInput, Family, Matrix, PenaltySpec, Solution,
    SolverConfig,
};

/// Entries with magnitude at or below this are not edges.
pub const EDGE_TOL: f64 = 1e-8;
/// eBIC scores closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-9;
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    /// Strictly descending, positive.
    pub lambda1_values: Vec<f64>,
    /// Empty for the single family.
    pub lambda2_values: Vec<f64>,
    /// Empty unless the problem has latent variables.
    pub mu1_values: Vec<f64>,
    pub gamma: f64,
}

impl ParameterGrid {
    pub fn new(lambda1_values: Vec<f64>) -> Self {
        ParameterGrid {
            lambda1_values,
            lambda2_values: Vec::new(),
            mu1_values: Vec::new(),
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn latent(&self) -> bool {
        !self.mu1_values.is_empty()
    }

    pub fn validate(&self, family: Family) -> Result<()> {
        let l1 = &self.lambda1_values;
        if l1.is_empty() {
            return Err(Error::InvalidParameter("lambda1 grid is empty".into()));
        }
        if l1.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::InvalidParameter(
                "lambda1 grid values must be finite and positive".into(),
            ));
        }
        if l1.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "lambda1 grid must be strictly descending".into(),
            ));
        }
        let nonneg = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !nonneg(&self.lambda2_values) || !nonneg(&self.mu1_values) {
            return Err(Error::InvalidParameter(
                "lambda2 and mu1 grid values must be finite and nonnegative".into(),
            ));
        }
        match family {
            Family::Sgl if !self.lambda2_values.is_empty() => {
                return Err(Error::InvalidParameter(
                    "a lambda2 grid is only meaningful for the group and fused families".into(),
                ))
            }
            Family::Ggl | Family::Fgl if self.lambda2_values.is_empty() => {
                return Err(Error::InvalidParameter(format!(
                    "the {family} family needs a lambda2 grid"
                )))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub lambda1: f64,
    /// `None` for the single family.
    pub lambda2: Option<f64>,
    /// `None` without latent variables.
    pub mu1: Option<f64>,
    /// Only scored when the solve converged.
    pub ebic: Option<f64>,
    pub edges: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

impl GridEntry {
    pub fn penalty(&self, family: Family, instances: usize) -> PenaltySpec {
        let pen = PenaltySpec {
            family,
            lambda1: self.lambda1,
            lambda2: self.lambda2.unwrap_or(0.0),
            latent: false,
            mu1: Vec::new(),
        };
        match self.mu1 {
            Some(mu) => pen.with_latent(vec![mu; instances]),
            None => pen,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub family: Family,
    pub gamma: f64,
    /// In traversal order: lambda1 descending, then lambda2 ascending, then mu1.
    pub entries: Vec<GridEntry>,
    pub best: usize,
    /// Solution at the chosen parameters, re-solved at a tighter tolerance.
    pub solution: Solution,
}

impl SelectionReport {
    pub fn best_entry(&self) -> &GridEntry {
        &self.entries[self.best]
    }
}

/// Number of strictly-upper-triangle entries with magnitude above [`EDGE_TOL`].
pub fn edge_count(theta: &Matrix) -> usize {
    let p = theta.nrows();
    (0..p)
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .filter(|&(i, j)| theta[(i, j)].abs() > EDGE_TOL)
        .count()
}

/// Extended BIC of precision estimates `theta`.
pub fn ebic(cov: &CovInput, theta: &[Matrix], gamma: f64) -> Result<f64> {
    ebic_parts(cov, theta, theta, gamma)
}

/// Extended BIC with separate likelihood precision and edge support.
pub fn ebic_parts(
    cov: &CovInput,
    precision: &[Matrix],
    support: &[Matrix],
    gamma: f64,
) -> Result<f64> {
    if precision.len() != cov.len() || support.len() != cov.len() {
        return Err(Error::InvalidParameter(
            "eBIC needs one matrix per instance".into(),
        ));
    }
    let p = cov.dim() as f64;
    let mut total = 0.0;
    for (k, (s, &n)) in cov.matrices().iter().zip(cov.sample_counts()).enumerate() {
        let logdet = log_det_pd(&precision[k]).ok_or(Error::NotPositiveDefinite { instance: k })?;
        let n = n as f64;
        let edges = edge_count(&support[k]) as f64;
        total += n * (trace_product(s, &precision[k]) - logdet)
            + edges * n.ln()
            + 4.0 * edges * gamma * p.ln();
    }
    Ok(total)
}

/// Free parameters of a `p x p` positive semidefinite matrix of rank `r`:
/// `p r - r (r - 1) / 2`.
pub fn lowrank_dof(l: &Matrix) -> usize {
    let p = l.nrows();
    let r = numerical_rank(l);
    p * r - r * r.saturating_sub(1) / 2
}

/// Extended BIC of a sparse-minus-low-rank estimate.
///
/// The likelihood uses `Theta - L`, and the complexity term counts the edges
/// of `Theta` plus the free parameters of each `L_k`. Without the low-rank
/// count the score always improves as `L` absorbs more of the covariance,
/// so selection over `mu1` would drift to the smallest value on the grid.
pub fn ebic_latent(cov: &CovInput, theta: &[Matrix], lowrank: &[Matrix], gamma: f64) -> Result<f64> {
    if lowrank.len() != cov.len() || theta.len() != cov.len() {
        return Err(Error::InvalidParameter(
            "eBIC needs one matrix per instance".into(),
        ));
    }
    let precision: Vec<Matrix> = theta.iter().zip(lowrank).map(|(t, l)| t - l).collect();
    let base = ebic_parts(cov, &precision, theta, gamma)?;
    let p = (cov.dim() as f64).ln();
    let extra: f64 = lowrank
        .iter()
        .zip(cov.sample_counts())
        .map(|(l, &n)| lowrank_dof(l) as f64 * ((n as f64).ln() + 4.0 * gamma * p))
        .sum();
    Ok(base + extra)
}

/// Largest off-diagonal magnitude over all instances.
pub fn lambda_max(cov: &CovInput) -> f64 {
    let mut best = 0.0f64;
    for s in cov.matrices() {
        let p = s.nrows();
        for j in 0..p {
            for i in 0..p {
                if i != j {
                    best = best.max(s[(i, j)].abs());
                }
            }
        }
    }
    best
}

/// `count` log-spaced values from `lambda_max` down to `lambda_max / 100`.
/// Falls back to `lambda_max = 1` when every off-diagonal entry is zero.
pub fn default_lambda_grid(cov: &CovInput, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    let top = grid_top(cov);
    Ok(log_spaced(top, top / 100.0, count))
}

fn grid_top(cov: &CovInput) -> f64 {
    let top = lambda_max(cov);
    if top > 0.0 && top.is_finite() {
        top
    } else {
        1.0
    }
}

/// `count` values from `lambda_max` down to `lambda_max / 10`.
pub fn default_mu1_grid(cov: &CovInput, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    let top = grid_top(cov);
    Ok(log_spaced(top, top / 10.0, count))
}

/// `count` values from `lambda_max / 10` down to `lambda_max / 1000`.
pub fn default_lambda2_grid(cov: &CovInput, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    let top = grid_top(cov);
    Ok(log_spaced(top / 10.0, top / 1000.0, count))
}

/// `count >= 2` values from `hi` down to `lo`, equally spaced in log scale.
pub fn log_spaced(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let step = (lo / hi).log10() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == 0 {
                hi
            } else if i == count - 1 {
                lo
            } else {
                hi * 10f64.powf(step * i as f64)
            }
        })
        .collect()
}

/// `R_ij = S_ij / sqrt(S_ii S_jj)` and the scales `d_i = sqrt(S_ii)`.
pub fn scale_to_correlation(s: &Matrix) -> Result<(Matrix, DVector<f64>)> {
    let p = s.nrows();
    if let Some(i) = (0..p).find(|&i| s[(i, i)].is_nan() || s[(i, i)] <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "diagonal entry {i} is not positive, cannot scale to correlation"
        )));
    }
    let d = DVector::from_iterator(p, (0..p).map(|i| s[(i, i)].sqrt()));
    let r = Matrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            s[(i, j)] / (d[i] * d[j])
        }
    });
    Ok((r, d))
}

/// `D^{-1} M D^{-1}`: maps a correlation-scale precision back to the original scale.
pub fn unscale_matrix(m: &Matrix, d: &DVector<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (d[i] * d[j]))
}

/// `D R D`: inverse of [`scale_to_correlation`] for covariances.
pub fn rescale_covariance(r: &Matrix, d: &DVector<f64>) -> Matrix {
    Matrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * d[i] * d[j])
}

struct Scored {
    entry: GridEntry,
    state: AdmmState,
}

/// Solves the problem at every grid point, scores each converged solution by
/// eBIC and returns the report with the best point re-solved at
/// `eps_abs / 10`.
///
/// Solves along `lambda1` are warm-started from the previous `lambda1` at the
/// same `(lambda2, mu1)`; those slices are independent and run in parallel.
pub fn grid_search(
    cov: &CovInput,
    family: Family,
    grid: &ParameterGrid,
    cfg: &SolverConfig,
) -> Result<SelectionReport> {
    grid.validate(family)?;
    let k = cov.len();
    let latent = grid.latent();
    let probe = GridEntry {
        lambda1: grid.lambda1_values[0],
        lambda2: grid.lambda2_values.first().copied(),
        mu1: grid.mu1_values.first().copied(),
        ebic: None,
        edges: Vec::new(),
        converged: false,
        iterations: 0,
    };
    check_problem(cov, &probe.penalty(family, k), cfg)?;

    let (work, scales) = if cfg.scale_to_correlation {
        let (m, d) = crate::admm::scale_input(cov)?;
        (m, Some(d))
    } else {
        (cov.matrices().to_vec(), None)
    };
    let back = |m: &Matrix, kk: usize| match &scales {
        Some(d) => unscale_matrix(m, &d[kk]),
        None => m.clone(),
    };

    let mut lambda2s: Vec<Option<f64>> = grid.lambda2_values.iter().map(|&x| Some(x)).collect();
    lambda2s.sort_by(|a, b| a.unwrap().total_cmp(&b.unwrap()));
    if lambda2s.is_empty() {
        lambda2s.push(None);
    }
    let mu1s: Vec<Option<f64>> = if latent {
        grid.mu1_values.iter().map(|&x| Some(x)).collect()
    } else {
        vec![None]
    };
    let slices: Vec<(Option<f64>, Option<f64>)> = lambda2s
        .iter()
        .flat_map(|&l2| mu1s.iter().map(move |&mu| (l2, mu)))
        .collect();

    let score = |entry: &mut GridEntry, sol: &Solution| -> Result<()> {
        let theta: Vec<Matrix> = (0..k).map(|i| back(&sol.theta[i], i)).collect();
        entry.edges = theta.iter().map(edge_count).collect();
        entry.converged = sol.diagnostics.converged;
        entry.iterations = sol.diagnostics.iterations;
        entry.ebic = if entry.converged {
            let scored = if latent {
                let lowrank: Vec<Matrix> = (0..k).map(|i| back(&sol.lowrank[i], i)).collect();
                ebic_latent(cov, &theta, &lowrank, grid.gamma)
            } else {
                ebic(cov, &theta, grid.gamma)
            };
            match scored {
                Ok(v) => Some(v),
                Err(Error::NotPositiveDefinite { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(())
    };

    let per_slice: Vec<Vec<Scored>> = slices
        .par_iter()
        .map(|&(l2, mu)| {
            let mut state: Option<AdmmState> = None;
            let mut out = Vec::with_capacity(grid.lambda1_values.len());
            for &l1 in &grid.lambda1_values {
                let mut entry = GridEntry {
                    lambda1: l1,
                    lambda2: l2,
                    mu1: mu,
                    ebic: None,
                    edges: Vec::new(),
                    converged: false,
                    iterations: 0,
                };
                let pen = entry.penalty(family, k);
                let (sol, st) = run(&work, &pen, cfg, state.take());
                score(&mut entry, &sol)?;
                state = Some(st.clone());
                out.push(Scored { entry, state: st });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    // reorder into lambda1-major traversal
    let n1 = grid.lambda1_values.len();
    let mut slots: Vec<Vec<Option<Scored>>> = per_slice
        .into_iter()
        .map(|v| v.into_iter().map(Some).collect())
        .collect();
    let mut scored = Vec::with_capacity(n1 * slots.len());
    for i in 0..n1 {
        for slice in slots.iter_mut() {
            scored.push(slice[i].take().expect("each slot is taken once"));
        }
    }

    let mut best: Option<usize> = None;
    for (idx, s) in scored.iter().enumerate() {
        let Some(score) = s.entry.ebic else { continue };
        best = match best {
            None => Some(idx),
            Some(b) => {
                let cur = &scored[b].entry;
                let cur_score = cur.ebic.unwrap();
                if score < cur_score - TIE_TOL
                    || ((score - cur_score).abs() <= TIE_TOL && s.entry.lambda1 > cur.lambda1)
                {
                    Some(idx)
                } else {
                    Some(b)
                }
            }
        };
    }
    let entries: Vec<GridEntry> = scored.iter().map(|s| s.entry.clone()).collect();
    let Some(best) = best else {
        return Err(Error::Selection {
            evaluated: entries.len(),
            entries,
        });
    };

    let chosen = &scored[best];
    let pen = chosen.entry.penalty(family, k);
    let mut tight = *cfg;
    tight.eps_abs /= 10.0;
    let (mut solution, _) = run(&work, &pen, &tight, Some(chosen.state.clone()));
    for i in 0..k {
        solution.theta[i] = back(&solution.theta[i], i);
        solution.lowrank[i] = back(&solution.lowrank[i], i);
    }
    if scales.is_some() {
        solution.diagnostics.objective_value =
            objective(cov, &pen, &solution.theta, &solution.lowrank).unwrap_or(f64::NAN);
    }

    Ok(SelectionReport {
        family,
        gamma: grid.gamma,
        entries,
        best,
        solution,
    })
}
