//! Scaled-form ADMM for the single, group and fused problems, each with an
//! optional low-rank (latent) component.
//!
//! The splitting introduces `Omega_k` for the log-det block and enforces
//! `Omega_k = Theta_k - L_k` through the scaled dual `U_k`. One iteration is
//!
//! ```text
//! Omega <- prox_logdet(Theta - L - U - S/rho, 1/rho)
//! Theta <- prox_{P/rho}(Omega + L + U)                (positionwise, diagonal copied)
//! L     <- prox_{nuclear+psd}(Theta - Omega - U, mu/rho)
//! U     <- U + Omega - Theta + L
//! ```
//!
//! Without latent variables `L` stays zero and the scheme is the usual
//! two-block graphical lasso ADMM.

use std::time::Instant;

use nalgebra::{Cholesky, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prox::{
    prox_fused_l1, prox_log_det, prox_nuclear_psd, prox_sparse_group, soft_threshold,
};
use crate::selection::{scale_to_correlation, unscale_matrix};
use crate::types::{
    objective, symmetrize, CovInput, Family, Matrix, PenaltySpec, Solution, SolveDiagnostics,
    SolverConfig,
};

/// Residual ratio that triggers a change of `rho`.
const RHO_BALANCE_RATIO: f64 = 10.0;
const RHO_SCALE: f64 = 2.0;

/// Full iterate of the solver; can seed a later solve (warm start).
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub omega: Vec<Matrix>,
    pub theta: Vec<Matrix>,
    pub lowrank: Vec<Matrix>,
    pub dual: Vec<Matrix>,
    pub rho: f64,
    pub iteration: usize,
}

impl AdmmState {
    /// `Theta = Omega = I`, `L = 0`, `U = 0`.
    pub fn initial(instances: usize, dim: usize, rho: f64) -> Self {
        let eye = Matrix::identity(dim, dim);
        let zero = Matrix::zeros(dim, dim);
        AdmmState {
            omega: vec![eye.clone(); instances],
            theta: vec![eye; instances],
            lowrank: vec![zero.clone(); instances],
            dual: vec![zero; instances],
            rho,
            iteration: 0,
        }
    }

    fn matches(&self, instances: usize, dim: usize) -> bool {
        let ok = |v: &Vec<Matrix>| v.len() == instances && v.iter().all(|m| m.shape() == (dim, dim));
        ok(&self.omega) && ok(&self.theta) && ok(&self.lowrank) && ok(&self.dual)
    }
}

/// Single graphical lasso.
pub fn solve_sgl(s: &Matrix, n: usize, lambda1: f64, cfg: &SolverConfig) -> Result<Solution> {
    solve_multi(&CovInput::single(s.clone(), n), &PenaltySpec::sgl(lambda1), cfg)
}

/// Single graphical lasso with a low-rank latent component.
pub fn solve_latent_sgl(
    s: &Matrix,
    n: usize,
    lambda1: f64,
    mu1: f64,
    cfg: &SolverConfig,
) -> Result<Solution> {
    solve_multi(
        &CovInput::single(s.clone(), n),
        &PenaltySpec::sgl(lambda1).with_latent(vec![mu1]),
        cfg,
    )
}

/// Solves any member of the problem family with ADMM, honoring
/// `cfg.scale_to_correlation`.
pub fn solve_multi(cov: &CovInput, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<Solution> {
    check_problem(cov, pen, cfg)?;
    if !cfg.scale_to_correlation {
        return Ok(run(cov.matrices(), pen, cfg, None).0);
    }
    let (scaled, scales) = scale_input(cov)?;
    let mut sol = run(&scaled, pen, cfg, None).0;
    unscale_solution(&mut sol, &scales);
    sol.diagnostics.objective_value =
        objective(cov, pen, &sol.theta, &sol.lowrank).unwrap_or(f64::NAN);
    Ok(sol)
}

/// Runs ADMM on the covariances exactly as given, optionally from a previous
/// state, and returns the final state alongside the solution.
/// `cfg.scale_to_correlation` is not applied here.
pub fn solve_with_state(
    cov: &CovInput,
    pen: &PenaltySpec,
    cfg: &SolverConfig,
    init: Option<AdmmState>,
) -> Result<(Solution, AdmmState)> {
    check_problem(cov, pen, cfg)?;
    Ok(run(cov.matrices(), pen, cfg, init))
}

pub(crate) fn check_problem(cov: &CovInput, pen: &PenaltySpec, cfg: &SolverConfig) -> Result<()> {
    cov.ensure_valid()?;
    pen.validate(cov.len())?;
    cfg.validate()
}

pub(crate) fn scale_input(cov: &CovInput) -> Result<(Vec<Matrix>, Vec<DVector<f64>>)> {
    let mut mats = Vec::with_capacity(cov.len());
    let mut scales = Vec::with_capacity(cov.len());
    for s in cov.matrices() {
        let (r, d) = scale_to_correlation(s)?;
        mats.push(r);
        scales.push(d);
    }
    Ok((mats, scales))
}

pub(crate) fn unscale_solution(sol: &mut Solution, scales: &[DVector<f64>]) {
    for (k, d) in scales.iter().enumerate() {
        sol.theta[k] = unscale_matrix(&sol.theta[k], d);
        sol.lowrank[k] = unscale_matrix(&sol.lowrank[k], d);
    }
}

fn frob2(m: &Matrix) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Core iteration. Inputs are assumed validated.
pub(crate) fn run(
    covs: &[Matrix],
    pen: &PenaltySpec,
    cfg: &SolverConfig,
    init: Option<AdmmState>,
) -> (Solution, AdmmState) {
    let start = Instant::now();
    let k = covs.len();
    let p = covs[0].nrows();
    let covs: Vec<Matrix> = covs
        .iter()
        .map(|s| {
            let mut s = s.clone();
            symmetrize(&mut s);
            s
        })
        .collect();

    let mut st = match init {
        Some(mut st) if st.matches(k, p) => {
            if !cfg.adaptive_rho {
                let ratio = st.rho / cfg.rho_init;
                st.dual.iter_mut().for_each(|u| *u *= ratio);
                st.rho = cfg.rho_init;
            }
            st.iteration = 0;
            st
        }
        _ => AdmmState::initial(k, p, cfg.rho_init),
    };
    if !pen.latent {
        st.lowrank.iter_mut().for_each(|l| l.fill(0.0));
        if covs.iter().all(|s| max_off_diagonal(s) <= pen.lambda1) {
            return diagonal_solution(&covs, pen, st, start);
        }
    }

    let l2 = pen.lambda2_effective();
    let scale = ((k * p * p) as f64).sqrt();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;

    for it in 1..=cfg.max_iter {
        let rho = st.rho;

        st.omega = (0..k)
            .into_par_iter()
            .map(|i| {
                let a = &st.theta[i] - &st.lowrank[i] - &st.dual[i] - &covs[i] / rho;
                prox_log_det(&a, 1.0 / rho)
            })
            .collect();

        let targets: Vec<Matrix> = (0..k)
            .map(|i| &st.omega[i] + &st.lowrank[i] + &st.dual[i])
            .collect();
        let theta_new = penalty_prox(&targets, pen.family, pen.lambda1 / rho, l2 / rho);

        let lowrank_new: Vec<Matrix> = if pen.latent {
            (0..k)
                .into_par_iter()
                .map(|i| {
                    let a = &theta_new[i] - &st.omega[i] - &st.dual[i];
                    prox_nuclear_psd(&a, pen.mu1[i] / rho)
                })
                .collect()
        } else {
            st.lowrank.clone()
        };

        let mut r2 = 0.0;
        let mut s2 = 0.0;
        let mut omega2 = 0.0;
        let mut diff2 = 0.0;
        for i in 0..k {
            let resid = &st.omega[i] - &theta_new[i] + &lowrank_new[i];
            r2 += frob2(&resid);
            s2 += frob2(&(&theta_new[i] - &st.theta[i])) + frob2(&(&lowrank_new[i] - &st.lowrank[i]));
            omega2 += frob2(&st.omega[i]);
            diff2 += frob2(&(&theta_new[i] - &lowrank_new[i]));
            st.dual[i] += resid;
        }
        st.theta = theta_new;
        st.lowrank = lowrank_new;
        st.iteration = it;

        primal = r2.sqrt();
        dual = rho * s2.sqrt();
        let dual_norm = st.dual.iter().map(frob2).sum::<f64>().sqrt();
        let eps_pri = scale * cfg.eps_abs + cfg.eps_rel * omega2.sqrt().max(diff2.sqrt());
        let eps_dual = scale * cfg.eps_abs + cfg.eps_rel * rho * dual_norm;

        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }

        if cfg.adaptive_rho {
            if primal > RHO_BALANCE_RATIO * dual {
                st.rho *= RHO_SCALE;
                st.dual.iter_mut().for_each(|u| *u /= RHO_SCALE);
            } else if dual > RHO_BALANCE_RATIO * primal {
                st.rho /= RHO_SCALE;
                st.dual.iter_mut().for_each(|u| *u *= RHO_SCALE);
            }
        }
    }

    let cov = CovInput::new(covs, vec![2; k]);
    let objective_value = objective(&cov, pen, &st.theta, &st.lowrank).unwrap_or(f64::NAN);
    let sol = Solution {
        theta: st.theta.clone(),
        lowrank: st.lowrank.clone(),
        diagnostics: SolveDiagnostics {
            iterations: st.iteration,
            primal_residual: primal,
            dual_residual: dual,
            objective_value,
            converged,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
    };
    (sol, st)
}

fn max_off_diagonal(s: &Matrix) -> f64 {
    let p = s.nrows();
    let mut m = 0.0f64;
    for j in 1..p {
        for i in 0..j {
            m = m.max(s[(i, j)].abs());
        }
    }
    m
}

/// `Theta = diag(1/S_ii)` is optimal for every family once `lambda1` reaches
/// all off-diagonal magnitudes. The returned state is the ADMM fixed point
/// for that solution at the current `rho`.
fn diagonal_solution(
    covs: &[Matrix],
    pen: &PenaltySpec,
    mut st: AdmmState,
    start: Instant,
) -> (Solution, AdmmState) {
    let p = covs[0].nrows();
    for (i, s) in covs.iter().enumerate() {
        let theta = Matrix::from_diagonal(&s.diagonal().map(|d| 1.0 / d));
        let mut dual = -s / st.rho;
        for j in 0..p {
            dual[(j, j)] = 0.0;
        }
        st.omega[i] = theta.clone();
        st.theta[i] = theta;
        st.dual[i] = dual;
    }
    st.iteration = 0;
    let cov = CovInput::new(covs.to_vec(), vec![2; covs.len()]);
    let objective_value = objective(&cov, pen, &st.theta, &st.lowrank).unwrap_or(f64::NAN);
    let sol = Solution {
        theta: st.theta.clone(),
        lowrank: st.lowrank.clone(),
        diagnostics: SolveDiagnostics {
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective_value,
            converged: true,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
    };
    (sol, st)
}

/// Positionwise prox of the sparsity penalty over the upper triangle, mirrored.
/// Diagonals are copied unchanged.
fn penalty_prox(targets: &[Matrix], family: Family, t1: f64, t2: f64) -> Vec<Matrix> {
    let k = targets.len();
    let p = targets[0].nrows();
    let mut out: Vec<Matrix> = targets.to_vec();
    let mut v = vec![0.0; k];
    for j in 1..p {
        for i in 0..j {
            for (slot, t) in v.iter_mut().zip(targets) {
                *slot = t[(i, j)];
            }
            let shrunk = match family {
                Family::Sgl => v.iter().map(|&x| soft_threshold(x, t1)).collect(),
                Family::Ggl => prox_sparse_group(&v, t1, t2),
                Family::Fgl => prox_fused_l1(&v, t1, t2),
            };
            for (m, x) in out.iter_mut().zip(shrunk) {
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
    }
    out
}

/// Largest violation of the stationarity condition for `Theta`:
/// `max_k || (Theta_k - L_k)^{-1} - S_k - G_k ||_inf`, with `G` the element of
/// the penalty subdifferential at `Theta` closest to the observed gradient.
pub fn kkt_residual(cov: &CovInput, pen: &PenaltySpec, sol: &Solution) -> Result<f64> {
    let k = cov.len();
    let p = cov.dim();
    if sol.theta.len() != k || sol.lowrank.len() != k {
        return Err(Error::InvalidParameter(
            "solution and input disagree on the number of instances".into(),
        ));
    }
    let mut grads = Vec::with_capacity(k);
    for i in 0..k {
        let omega = &sol.theta[i] - &sol.lowrank[i];
        if omega.shape() != (p, p) {
            return Err(Error::InvalidParameter(format!(
                "instance {i}: expected {p}x{p} matrices"
            )));
        }
        let inv = Cholesky::new(omega)
            .ok_or(Error::NotPositiveDefinite { instance: i })?
            .inverse();
        grads.push(inv - &cov.matrices()[i]);
    }

    let l1 = pen.lambda1;
    let l2 = pen.lambda2_effective();
    let mut worst = 0.0f64;
    for g in &grads {
        for i in 0..p {
            worst = worst.max(g[(i, i)].abs());
        }
    }
    let mut theta_v = vec![0.0; k];
    let mut grad_v = vec![0.0; k];
    for j in 0..p {
        for i in 0..p {
            if i == j {
                continue;
            }
            for kk in 0..k {
                theta_v[kk] = sol.theta[kk][(i, j)];
                grad_v[kk] = grads[kk][(i, j)];
            }
            let nearest = match pen.family {
                Family::Sgl => nearest_l1(&theta_v, &grad_v, l1),
                Family::Ggl => nearest_sparse_group(&theta_v, &grad_v, l1, l2),
                Family::Fgl => nearest_fused(&theta_v, &grad_v, l1, l2),
            };
            for kk in 0..k {
                worst = worst.max((grad_v[kk] - nearest[kk]).abs());
            }
        }
    }
    Ok(worst)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn nearest_l1(theta: &[f64], r: &[f64], l1: f64) -> Vec<f64> {
    theta
        .iter()
        .zip(r)
        .map(|(&t, &g)| if t != 0.0 { l1 * sign(t) } else { g.clamp(-l1, l1) })
        .collect()
}

fn nearest_sparse_group(theta: &[f64], r: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        return theta
            .iter()
            .zip(r)
            .map(|(&t, &g)| {
                if t != 0.0 {
                    l1 * sign(t) + l2 * t / norm
                } else {
                    g.clamp(-l1, l1)
                }
            })
            .collect();
    }
    // subdifferential at zero is the box of radius l1 plus the ball of radius l2
    let soft: Vec<f64> = r.iter().map(|&g| soft_threshold(g, l1)).collect();
    let sn = soft.iter().map(|x| x * x).sum::<f64>().sqrt();
    let excess = if sn > l2 { 1.0 - l2 / sn } else { 0.0 };
    r.iter().zip(&soft).map(|(&g, &s)| g - excess * s).collect()
}

/// Projects `r` onto `{ l1 * s + l2 * D^T t }` where `s`, `t` range over the
/// subdifferentials of `|theta_k|` and `|theta_{k+1} - theta_k|`. Small box QP,
/// solved by cyclic coordinate descent.
fn nearest_fused(theta: &[f64], r: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let k = theta.len();
    let m = k.saturating_sub(1);
    let mut s: Vec<f64> = theta.iter().map(|&t| sign(t)).collect();
    let s_free: Vec<bool> = theta.iter().map(|&t| t == 0.0).collect();
    let mut t: Vec<f64> = (0..m).map(|j| sign(theta[j + 1] - theta[j])).collect();
    let t_free: Vec<bool> = (0..m).map(|j| theta[j + 1] == theta[j]).collect();
    for j in 0..k {
        if s_free[j] {
            s[j] = 0.0;
        }
    }
    for j in 0..m {
        if t_free[j] {
            t[j] = 0.0;
        }
    }
    let combine = |s: &[f64], t: &[f64]| -> Vec<f64> {
        let mut g: Vec<f64> = s.iter().map(|x| l1 * x).collect();
        for (j, &tj) in t.iter().enumerate() {
            g[j] -= l2 * tj;
            g[j + 1] += l2 * tj;
        }
        g
    };
    let mut g = combine(&s, &t);
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        if l1 > 0.0 {
            for j in 0..k {
                if !s_free[j] {
                    continue;
                }
                let resid = r[j] - g[j];
                let new = (s[j] + resid / l1).clamp(-1.0, 1.0);
                let delta = new - s[j];
                if delta != 0.0 {
                    g[j] += l1 * delta;
                    s[j] = new;
                    change = change.max((l1 * delta).abs());
                }
            }
        }
        if l2 > 0.0 {
            for j in 0..m {
                if !t_free[j] {
                    continue;
                }
                // column is l2 * (e_{j+1} - e_j), squared norm 2 l2^2
                let resid = (r[j + 1] - g[j + 1]) - (r[j] - g[j]);
                let new = (t[j] + resid / (2.0 * l2)).clamp(-1.0, 1.0);
                let delta = new - t[j];
                if delta != 0.0 {
                    g[j] -= l2 * delta;
                    g[j + 1] += l2 * delta;
                    t[j] = new;
                    change = change.max((l2 * delta).abs());
                }
            }
        }
        if change <= 1e-15 {
            break;
        }
    }
    g
}
