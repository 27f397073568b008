//! C interface to `gglopt`.
//!
//! Objects cross the boundary as opaque handles (`GgloptProblem`,
//! `GgloptSolution`, `GgloptReport`) created and released by this library.
//! Every fallible call returns a [`GgloptStatus`]; on failure a message is
//! available from [`gglopt_last_error`] on the same thread.
//!
//! Matrices are passed as dense row-major `double` arrays. A problem with `K`
//! instances of dimension `p` takes `K * p * p` values, instance after
//! instance.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gglopt::{
    ebic_latent, grid_search, kkt_residual, objective, CovInput, Error, Family, Matrix, ParameterGrid,
    PenaltySpec, SelectionReport, Solution, SolverConfig,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgloptStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument is out of range or inconsistent with the others.
    InvalidArgument = 2,
    /// The covariance input failed validation.
    Validation = 3,
    /// The solver stopped at `max_iter`; the returned solution is still valid.
    NotConverged = 4,
    /// A matrix left the positive definite cone or another numerical failure.
    Numeric = 5,
    /// No grid point converged during model selection.
    Selection = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgloptFamily {
    Sgl = 0,
    Ggl = 1,
    Fgl = 2,
}

impl From<GgloptFamily> for Family {
    fn from(f: GgloptFamily) -> Self {
        match f {
            GgloptFamily::Sgl => Family::Sgl,
            GgloptFamily::Ggl => Family::Ggl,
            GgloptFamily::Fgl => Family::Fgl,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgloptSolverConfig {
    pub rho_init: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub adaptive_rho: bool,
    pub scale_to_correlation: bool,
}

impl From<GgloptSolverConfig> for SolverConfig {
    fn from(c: GgloptSolverConfig) -> Self {
        SolverConfig {
            rho_init: c.rho_init,
            max_iter: c.max_iter,
            eps_abs: c.eps_abs,
            eps_rel: c.eps_rel,
            adaptive_rho: c.adaptive_rho,
            scale_to_correlation: c.scale_to_correlation,
        }
    }
}

/// Regularization. `mu1` points to `mu1_len` weights (1 or `K`) and is read
/// only when `latent` is set; `lambda2` is ignored for the single family.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GgloptPenalty {
    pub family: GgloptFamily,
    pub lambda1: f64,
    pub lambda2: f64,
    pub latent: bool,
    pub mu1: *const f64,
    pub mu1_len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GgloptDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective_value: f64,
    pub converged: bool,
    pub wall_time_seconds: f64,
}

/// One evaluated grid point. Absent parameters and scores are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GgloptGridEntry {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub ebic: f64,
    /// Edges summed over instances.
    pub edges: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// Validated covariance input.
pub struct GgloptProblem {
    cov: CovInput,
}

pub struct GgloptSolution {
    sol: Solution,
}

pub struct GgloptReport {
    report: SelectionReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> GgloptStatus {
    match err {
        Error::Validation(_) | Error::Parse(_) => GgloptStatus::Validation,
        Error::InvalidParameter(_) => GgloptStatus::InvalidArgument,
        Error::NotPositiveDefinite { .. } | Error::Numeric(_) => GgloptStatus::Numeric,
        Error::Selection { .. } => GgloptStatus::Selection,
        Error::Io(_) => GgloptStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> GgloptStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn invalid(msg: &str) -> GgloptStatus {
    set_error(msg);
    GgloptStatus::InvalidArgument
}

fn null(name: &str) -> GgloptStatus {
    set_error(format!("{name} is null"));
    GgloptStatus::NullPointer
}

/// Runs `f`, converting panics into `GgloptStatus::Panic`.
fn guard(f: impl FnOnce() -> GgloptStatus) -> GgloptStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            GgloptStatus::Panic
        }
    }
}

unsafe fn opt_slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

unsafe fn penalty_spec(pen: &GgloptPenalty, instances: usize) -> Result<PenaltySpec, GgloptStatus> {
    let mut spec = PenaltySpec {
        family: pen.family.into(),
        lambda1: pen.lambda1,
        lambda2: if pen.family == GgloptFamily::Sgl { 0.0 } else { pen.lambda2 },
        latent: false,
        mu1: Vec::new(),
    };
    if pen.latent {
        let Some(mu) = opt_slice(pen.mu1, pen.mu1_len) else {
            return Err(null("penalty.mu1"));
        };
        let mu = match mu.len() {
            1 => vec![mu[0]; instances],
            n if n == instances => mu.to_vec(),
            _ => return Err(invalid("penalty.mu1_len must be 1 or the number of instances")),
        };
        spec = spec.with_latent(mu);
    }
    Ok(spec)
}

fn to_row_major(m: &Matrix, out: &mut [f64]) {
    let p = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..p {
            out[i * p + j] = m[(i, j)];
        }
    }
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn gglopt_config_default() -> GgloptSolverConfig {
    let c = SolverConfig::default();
    GgloptSolverConfig {
        rho_init: c.rho_init,
        max_iter: c.max_iter,
        eps_abs: c.eps_abs,
        eps_rel: c.eps_rel,
        adaptive_rho: c.adaptive_rho,
        scale_to_correlation: c.scale_to_correlation,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gglopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn gglopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies and validates `k` covariance matrices of dimension `p`.
///
/// # Safety
/// `data` must point to `k * p * p` doubles and `samples` to `k` counts.
#[no_mangle]
pub unsafe extern "C" fn gglopt_problem_new(
    data: *const f64,
    k: usize,
    p: usize,
    samples: *const usize,
    out: *mut *mut GgloptProblem,
) -> GgloptStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        if data.is_null() {
            return null("data");
        }
        if samples.is_null() {
            return null("samples");
        }
        if k == 0 || p == 0 {
            return invalid("k and p must be positive");
        }
        let Some(len) = k.checked_mul(p).and_then(|x| x.checked_mul(p)) else {
            return invalid("k * p * p overflows");
        };
        let values = slice::from_raw_parts(data, len);
        let mats: Vec<Matrix> = values
            .chunks_exact(p * p)
            .map(|c| Matrix::from_row_slice(p, p, c))
            .collect();
        let counts = slice::from_raw_parts(samples, k).to_vec();
        match CovInput::checked(mats, counts) {
            Ok(cov) => {
                *out = Box::into_raw(Box::new(GgloptProblem { cov }));
                GgloptStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `problem` must come from `gglopt_problem_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gglopt_problem_free(problem: *mut GgloptProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves at fixed regularization. On `GGLOPT_STATUS_NOT_CONVERGED` the
/// solution is still stored in `out` and must be freed.
///
/// # Safety
/// All pointers must be valid; `out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn gglopt_solve(
    problem: *const GgloptProblem,
    penalty: *const GgloptPenalty,
    config: *const GgloptSolverConfig,
    out: *mut *mut GgloptSolution,
) -> GgloptStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let (Some(problem), Some(penalty), Some(config)) =
            (problem.as_ref(), penalty.as_ref(), config.as_ref())
        else {
            return null("problem, penalty or config");
        };
        let pen = match penalty_spec(penalty, problem.cov.len()) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match gglopt::solve(&problem.cov, &pen, &SolverConfig::from(*config)) {
            Ok(sol) => {
                let converged = sol.diagnostics.converged;
                *out = Box::into_raw(Box::new(GgloptSolution { sol }));
                if converged {
                    GgloptStatus::Ok
                } else {
                    set_error("maximum number of iterations reached");
                    GgloptStatus::NotConverged
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `solution` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gglopt_solution_free(solution: *mut GgloptSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of instances and dimension of a solution.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_solution_shape(
    solution: *const GgloptSolution,
    k: *mut usize,
    p: *mut usize,
) -> GgloptStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return null("solution");
        };
        if k.is_null() || p.is_null() {
            return null("k or p");
        }
        *k = s.sol.theta.len();
        *p = s.sol.theta[0].nrows();
        GgloptStatus::Ok
    })
}

unsafe fn copy_matrix(
    solution: *const GgloptSolution,
    instance: usize,
    out: *mut f64,
    len: usize,
    pick: fn(&Solution) -> &Vec<Matrix>,
) -> GgloptStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return null("solution");
        };
        if out.is_null() {
            return null("out");
        }
        let mats = pick(&s.sol);
        let Some(m) = mats.get(instance) else {
            return invalid("instance index out of range");
        };
        if len != m.len() {
            return invalid("output length must be p * p");
        }
        to_row_major(m, slice::from_raw_parts_mut(out, len));
        GgloptStatus::Ok
    })
}

/// Copies the sparse component of instance `instance` (row-major, `len = p*p`).
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gglopt_solution_theta(
    solution: *const GgloptSolution,
    instance: usize,
    out: *mut f64,
    len: usize,
) -> GgloptStatus {
    copy_matrix(solution, instance, out, len, |s| &s.theta)
}

/// Copies the low-rank component of instance `instance`; zero without
/// latent variables.
///
/// # Safety
/// `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gglopt_solution_lowrank(
    solution: *const GgloptSolution,
    instance: usize,
    out: *mut f64,
    len: usize,
) -> GgloptStatus {
    copy_matrix(solution, instance, out, len, |s| &s.lowrank)
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_solution_diagnostics(
    solution: *const GgloptSolution,
    out: *mut GgloptDiagnostics,
) -> GgloptStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else {
            return null("solution");
        };
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let d = &s.sol.diagnostics;
        *out = GgloptDiagnostics {
            iterations: d.iterations,
            primal_residual: d.primal_residual,
            dual_residual: d.dual_residual,
            objective_value: d.objective_value,
            converged: d.converged,
            wall_time_seconds: d.wall_time_seconds,
        };
        GgloptStatus::Ok
    })
}

/// Objective value of `solution` for `problem` under `penalty`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_objective(
    problem: *const GgloptProblem,
    penalty: *const GgloptPenalty,
    solution: *const GgloptSolution,
    out: *mut f64,
) -> GgloptStatus {
    guard(|| {
        let (Some(problem), Some(penalty), Some(s)) =
            (problem.as_ref(), penalty.as_ref(), solution.as_ref())
        else {
            return null("problem, penalty or solution");
        };
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let pen = match penalty_spec(penalty, problem.cov.len()) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match objective(&problem.cov, &pen, &s.sol.theta, &s.sol.lowrank) {
            Ok(v) => {
                *out = v;
                GgloptStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Largest violation of the optimality conditions (solver-independent accuracy).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_kkt_residual(
    problem: *const GgloptProblem,
    penalty: *const GgloptPenalty,
    solution: *const GgloptSolution,
    out: *mut f64,
) -> GgloptStatus {
    guard(|| {
        let (Some(problem), Some(penalty), Some(s)) =
            (problem.as_ref(), penalty.as_ref(), solution.as_ref())
        else {
            return null("problem, penalty or solution");
        };
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let pen = match penalty_spec(penalty, problem.cov.len()) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match kkt_residual(&problem.cov, &pen, &s.sol) {
            Ok(v) => {
                *out = v;
                GgloptStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Extended BIC of the solution. With a low-rank part the likelihood uses
/// `Theta - L` and the parameters of `L` are counted alongside the edges.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_ebic(
    problem: *const GgloptProblem,
    solution: *const GgloptSolution,
    gamma: f64,
    out: *mut f64,
) -> GgloptStatus {
    guard(|| {
        let (Some(problem), Some(s)) = (problem.as_ref(), solution.as_ref()) else {
            return null("problem or solution");
        };
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        match ebic_latent(&problem.cov, &s.sol.theta, &s.sol.lowrank, gamma) {
            Ok(v) => {
                *out = v;
                GgloptStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Grid search with the extended BIC. `lambda1` must be strictly
/// descending; pass `lambda2_len = 0` for the single family and `mu1_len = 0`
/// without latent variables.
///
/// # Safety
/// Array pointers must hold the stated number of values; `out` receives a
/// new handle.
#[no_mangle]
pub unsafe extern "C" fn gglopt_select(
    problem: *const GgloptProblem,
    family: GgloptFamily,
    lambda1: *const f64,
    lambda1_len: usize,
    lambda2: *const f64,
    lambda2_len: usize,
    mu1: *const f64,
    mu1_len: usize,
    gamma: f64,
    config: *const GgloptSolverConfig,
    out: *mut *mut GgloptReport,
) -> GgloptStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let (Some(problem), Some(config)) = (problem.as_ref(), config.as_ref()) else {
            return null("problem or config");
        };
        let (Some(l1), Some(l2), Some(mu)) = (
            opt_slice(lambda1, lambda1_len),
            opt_slice(lambda2, lambda2_len),
            opt_slice(mu1, mu1_len),
        ) else {
            return null("grid array");
        };
        let grid = ParameterGrid {
            lambda1_values: l1.to_vec(),
            lambda2_values: l2.to_vec(),
            mu1_values: mu.to_vec(),
            gamma,
        };
        match grid_search(&problem.cov, family.into(), &grid, &SolverConfig::from(*config)) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(GgloptReport { report }));
                GgloptStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `report` must come from `gglopt_select` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gglopt_report_free(report: *mut GgloptReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of evaluated grid points and index of the selected one.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_report_summary(
    report: *const GgloptReport,
    entries: *mut usize,
    best: *mut usize,
) -> GgloptStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return null("report");
        };
        if entries.is_null() || best.is_null() {
            return null("entries or best");
        }
        *entries = r.report.entries.len();
        *best = r.report.best;
        GgloptStatus::Ok
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gglopt_report_entry(
    report: *const GgloptReport,
    index: usize,
    out: *mut GgloptGridEntry,
) -> GgloptStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return null("report");
        };
        let Some(out) = out.as_mut() else {
            return null("out");
        };
        let Some(e) = r.report.entries.get(index) else {
            return invalid("entry index out of range");
        };
        *out = GgloptGridEntry {
            lambda1: e.lambda1,
            lambda2: e.lambda2.unwrap_or(f64::NAN),
            mu1: e.mu1.unwrap_or(f64::NAN),
            ebic: e.ebic.unwrap_or(f64::NAN),
            edges: e.edges.iter().sum(),
            converged: e.converged,
            iterations: e.iterations,
        };
        GgloptStatus::Ok
    })
}

/// Copy of the selected solution as an independent handle.
///
/// # Safety
/// Pointers must be valid; `out` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn gglopt_report_solution(
    report: *const GgloptReport,
    out: *mut *mut GgloptSolution,
) -> GgloptStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Some(r) = report.as_ref() else {
            return null("report");
        };
        *out = Box::into_raw(Box::new(GgloptSolution {
            sol: r.report.solution.clone(),
        }));
        GgloptStatus::Ok
    })
}
