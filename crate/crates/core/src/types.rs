//! Problem data, penalty and solver parameters, and the objective function
//! shared by every solver.
//!
//! The objective for `K` instances is
//!
//! ```text
//! sum_k [ -log det(Theta_k - L_k) + <S_k, Theta_k - L_k> ] + P(Theta) + sum_k mu_k * ||L_k||_*
//! ```
//!
//! where `P` is one of the single, group or fused penalties. All penalties act
//! on off-diagonal entries only.

use std::fmt;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::EigenDecomposition;

pub type Matrix = DMatrix<f64>;

/// Maximum absolute asymmetry accepted on input covariances.
pub const INPUT_SYMMETRY_TOL: f64 = 1e-10;
/// Maximum absolute asymmetry tolerated on solver outputs.
pub const OUTPUT_SYMMETRY_TOL: f64 = 1e-9;
/// Smallest eigenvalue accepted for an empirical covariance.
pub const PSD_TOL: f64 = -1e-8;

/// One or more empirical covariance matrices with their sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CovInput {
    matrices: Vec<Matrix>,
    sample_counts: Vec<usize>,
}

impl CovInput {
    /// Stores the data without checking it. Use [`validate_input`] or
    /// [`CovInput::checked`] before solving.
    pub fn new(matrices: Vec<Matrix>, sample_counts: Vec<usize>) -> Self {
        CovInput {
            matrices,
            sample_counts,
        }
    }

    pub fn checked(matrices: Vec<Matrix>, sample_counts: Vec<usize>) -> Result<Self> {
        let cov = CovInput::new(matrices, sample_counts);
        cov.ensure_valid()?;
        Ok(cov)
    }

    pub fn single(s: Matrix, n: usize) -> Self {
        CovInput::new(vec![s], vec![n])
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_input(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn sample_counts(&self) -> &[usize] {
        &self.sample_counts
    }

    /// Number of instances `K`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Dimension `p` of the first matrix (0 when empty).
    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }
}

/// A single problem with an input defect, as reported by [`validate_input`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoInstances,
    NotSquare { instance: usize, rows: usize, cols: usize },
    TooSmall { instance: usize, dim: usize },
    DimensionMismatch { instance: usize, expected: usize, found: usize },
    NonFinite { instance: usize },
    Asymmetric { instance: usize, max_asymmetry: f64 },
    NotPositiveSemidefinite { instance: usize, min_eigenvalue: f64 },
    NonPositiveDiagonal { instance: usize, index: usize, value: f64 },
    SampleCountLength { expected: usize, found: usize },
    SampleCountTooSmall { instance: usize, count: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoInstances => write!(f, "no covariance matrices given"),
            Violation::NotSquare {
                instance,
                rows,
                cols,
            } => write!(f, "matrix {instance} is {rows}x{cols}, not square"),
            Violation::TooSmall { instance, dim } => {
                write!(f, "matrix {instance} has dimension {dim}, need at least 2")
            }
            Violation::DimensionMismatch {
                instance,
                expected,
                found,
            } => write!(
                f,
                "matrix {instance} has dimension {found}, expected {expected}"
            ),
            Violation::NonFinite { instance } => {
                write!(f, "matrix {instance} contains non-finite entries")
            }
            Violation::Asymmetric {
                instance,
                max_asymmetry,
            } => write!(
                f,
                "matrix {instance} is not symmetric (max asymmetry {max_asymmetry:e})"
            ),
            Violation::NotPositiveSemidefinite {
                instance,
                min_eigenvalue,
            } => write!(
                f,
                "matrix {instance} is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})"
            ),
            Violation::NonPositiveDiagonal {
                instance,
                index,
                value,
            } => write!(
                f,
                "matrix {instance} has non-positive diagonal entry {value} at {index}"
            ),
            Violation::SampleCountLength { expected, found } => write!(
                f,
                "got {found} sample counts for {expected} matrices"
            ),
            Violation::SampleCountTooSmall { instance, count } => write!(
                f,
                "sample count {count} for instance {instance} is below 2"
            ),
        }
    }
}

/// Checks a covariance input and returns every violation found. An empty
/// list means the input is valid.
pub fn validate_input(cov: &CovInput) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = cov.matrices.len();
    if k == 0 {
        out.push(Violation::NoInstances);
    }
    let expected = cov.dim();
    for (i, s) in cov.matrices.iter().enumerate() {
        if s.nrows() != s.ncols() {
            out.push(Violation::NotSquare {
                instance: i,
                rows: s.nrows(),
                cols: s.ncols(),
            });
            continue;
        }
        if s.nrows() < 2 {
            out.push(Violation::TooSmall {
                instance: i,
                dim: s.nrows(),
            });
        }
        if i > 0 && s.nrows() != expected {
            out.push(Violation::DimensionMismatch {
                instance: i,
                expected,
                found: s.nrows(),
            });
        }
        if s.iter().any(|x| !x.is_finite()) {
            out.push(Violation::NonFinite { instance: i });
            continue;
        }
        let asym = max_asymmetry(s);
        if asym > INPUT_SYMMETRY_TOL {
            out.push(Violation::Asymmetric {
                instance: i,
                max_asymmetry: asym,
            });
            // eigenvalues of a non-symmetric matrix say nothing useful here
            continue;
        }
        for (j, &d) in s.diagonal().iter().enumerate() {
            if d <= 0.0 {
                out.push(Violation::NonPositiveDiagonal {
                    instance: i,
                    index: j,
                    value: d,
                });
            }
        }
        if s.nrows() > 0 {
            let min_eig = EigenDecomposition::new(s).eigenvalues[0];
            if min_eig < PSD_TOL {
                out.push(Violation::NotPositiveSemidefinite {
                    instance: i,
                    min_eigenvalue: min_eig,
                });
            }
        }
    }
    if cov.sample_counts.len() != k {
        out.push(Violation::SampleCountLength {
            expected: k,
            found: cov.sample_counts.len(),
        });
    }
    for (i, &n) in cov.sample_counts.iter().enumerate() {
        if n < 2 {
            out.push(Violation::SampleCountTooSmall {
                instance: i,
                count: n,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Single graphical lasso (one instance).
    Sgl,
    /// Group graphical lasso: l1 plus groupwise l2 across instances.
    Ggl,
    /// Fused graphical lasso: l1 plus l1 on consecutive differences.
    Fgl,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Sgl => "sgl",
            Family::Ggl => "ggl",
            Family::Fgl => "fgl",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgl" => Ok(Family::Sgl),
            "ggl" => Ok(Family::Ggl),
            "fgl" => Ok(Family::Fgl),
            other => Err(Error::InvalidParameter(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub family: Family,
    pub lambda1: f64,
    /// Ignored for [`Family::Sgl`].
    pub lambda2: f64,
    pub latent: bool,
    /// Nuclear-norm weight per instance; only read when `latent` is set.
    pub mu1: Vec<f64>,
}

impl PenaltySpec {
    pub fn sgl(lambda1: f64) -> Self {
        PenaltySpec {
            family: Family::Sgl,
            lambda1,
            lambda2: 0.0,
            latent: false,
            mu1: Vec::new(),
        }
    }

    pub fn ggl(lambda1: f64, lambda2: f64) -> Self {
        PenaltySpec {
            family: Family::Ggl,
            lambda1,
            lambda2,
            latent: false,
            mu1: Vec::new(),
        }
    }

    pub fn fgl(lambda1: f64, lambda2: f64) -> Self {
        PenaltySpec {
            family: Family::Fgl,
            lambda1,
            lambda2,
            latent: false,
            mu1: Vec::new(),
        }
    }

    pub fn with_latent(mut self, mu1: Vec<f64>) -> Self {
        self.latent = true;
        self.mu1 = mu1;
        self
    }

    /// Effective `lambda2` (zero for the single family).
    pub fn lambda2_effective(&self) -> f64 {
        match self.family {
            Family::Sgl => 0.0,
            _ => self.lambda2,
        }
    }

    /// Nuclear weight for instance `k`, zero when not latent.
    pub fn mu(&self, k: usize) -> f64 {
        if self.latent {
            self.mu1[k]
        } else {
            0.0
        }
    }

    pub fn validate(&self, instances: usize) -> Result<()> {
        let bad = |x: f64| !x.is_finite() || x < 0.0;
        if bad(self.lambda1) {
            return Err(Error::InvalidParameter(format!(
                "lambda1 must be finite and nonnegative, got {}",
                self.lambda1
            )));
        }
        if bad(self.lambda2) {
            return Err(Error::InvalidParameter(format!(
                "lambda2 must be finite and nonnegative, got {}",
                self.lambda2
            )));
        }
        if self.family == Family::Sgl && instances != 1 {
            return Err(Error::InvalidParameter(format!(
                "the single family needs exactly one instance, got {instances}"
            )));
        }
        if self.latent {
            if self.mu1.len() != instances {
                return Err(Error::InvalidParameter(format!(
                    "expected {instances} mu1 values, got {}",
                    self.mu1.len()
                )));
            }
            if let Some(m) = self.mu1.iter().find(|&&m| bad(m)) {
                return Err(Error::InvalidParameter(format!(
                    "mu1 must be finite and nonnegative, got {m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective_value: f64,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Sparse components, one per instance.
    pub theta: Vec<Matrix>,
    /// Low-rank components; all zero for non-latent problems.
    pub lowrank: Vec<Matrix>,
    pub diagnostics: SolveDiagnostics,
}

impl Solution {
    /// Estimated precision matrices `Theta_k - L_k`.
    pub fn precision(&self) -> Vec<Matrix> {
        self.theta
            .iter()
            .zip(&self.lowrank)
            .map(|(t, l)| t - l)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho_init: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Residual balancing of the ADMM penalty parameter.
    pub adaptive_rho: bool,
    /// Solve on the correlation scale and transform back.
    pub scale_to_correlation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho_init: 1.0,
            max_iter: 1000,
            eps_abs: 1e-7,
            eps_rel: 1e-5,
            adaptive_rho: true,
            scale_to_correlation: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_init.is_finite() && self.rho_init > 0.0) {
            return Err(Error::InvalidParameter("rho_init must be positive".into()));
        }
        if !(self.eps_abs.is_finite() && self.eps_abs > 0.0) {
            return Err(Error::InvalidParameter("eps_abs must be positive".into()));
        }
        if !(self.eps_rel.is_finite() && self.eps_rel > 0.0) {
            return Err(Error::InvalidParameter("eps_rel must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Same configuration with both tolerances divided by `factor`.
    pub fn tightened(mut self, factor: f64) -> Self {
        self.eps_abs /= factor;
        self.eps_rel /= factor;
        self
    }
}

pub fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Replaces `m` by `(m + m^T) / 2` in place.
pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `log det(m)` via Cholesky, or `None` if `m` is not positive definite.
pub fn log_det_pd(m: &Matrix) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if d.is_nan() || d <= 0.0 || !d.is_finite() {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// `trace(a * b)` for same-shaped symmetric matrices, without forming the product.
pub fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn offdiag_abs_sum(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                acc += m[(i, j)].abs();
            }
        }
    }
    acc
}

/// Value of the sparsity penalty `P(Theta)`; sums run over all ordered pairs `i != j`.
pub fn penalty_value(pen: &PenaltySpec, theta: &[Matrix]) -> f64 {
    let l1: f64 = theta.iter().map(offdiag_abs_sum).sum::<f64>() * pen.lambda1;
    let l2 = pen.lambda2_effective();
    if l2 == 0.0 || theta.is_empty() {
        return l1;
    }
    let p = theta[0].nrows();
    let mut second = 0.0;
    match pen.family {
        Family::Sgl => {}
        Family::Ggl => {
            for j in 0..p {
                for i in 0..p {
                    if i != j {
                        second += theta.iter().map(|t| t[(i, j)].powi(2)).sum::<f64>().sqrt();
                    }
                }
            }
        }
        Family::Fgl => {
            for w in theta.windows(2) {
                second += offdiag_abs_sum(&(&w[1] - &w[0]));
            }
        }
    }
    l1 + l2 * second
}

/// Evaluates the full objective at `(theta, lowrank)`.
///
/// The nuclear norm of each `L_k` is taken as its trace, which is exact for
/// the positive semidefinite components the solvers produce.
pub fn objective(
    cov: &CovInput,
    pen: &PenaltySpec,
    theta: &[Matrix],
    lowrank: &[Matrix],
) -> Result<f64> {
    let k = cov.len();
    if theta.len() != k || lowrank.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected {k} theta and lowrank matrices, got {} and {}",
            theta.len(),
            lowrank.len()
        )));
    }
    let p = cov.dim();
    let mut total = 0.0;
    for (i, s) in cov.matrices().iter().enumerate() {
        if theta[i].shape() != (p, p) || lowrank[i].shape() != (p, p) {
            return Err(Error::InvalidParameter(format!(
                "instance {i}: expected {p}x{p} matrices"
            )));
        }
        let omega = &theta[i] - &lowrank[i];
        let logdet = log_det_pd(&omega).ok_or(Error::NotPositiveDefinite { instance: i })?;
        total += -logdet + trace_product(s, &omega);
        if pen.latent {
            total += pen.mu(i) * lowrank[i].trace();
        }
    }
    Ok(total + penalty_value(pen, theta))
}
