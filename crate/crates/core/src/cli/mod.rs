//! `gglopt` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input or flags,
//! 3 solver did not converge (outputs are still written).

mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::bench::{format_table, run_benchmark, BenchmarkParams};
use crate::error::Error;
use crate::io::{read_matrix, write_atomic, write_edges, write_matrix};
use crate::selection::{
    default_lambda2_grid, default_lambda_grid, default_mu1_grid, grid_search, ParameterGrid, EDGE_TOL,
};
use crate::synth::{generate_latent, generate_precision, sample_covariance, LatentParams};
use crate::types::{CovInput, Family, PenaltySpec, SolverConfig};

pub use manifest::{InputDigest, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Environment variable capping internal parallelism (0 or unset: automatic).
pub const THREADS_ENV: &str = "GGLOPT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gglopt", version, about = "Sparse inverse covariance estimation (single, group and fused graphical lasso)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve at fixed regularization parameters.
    Solve(SolveArgs),
    /// Select parameters by grid search and extended BIC.
    Select(SelectArgs),
    /// Write a synthetic ground truth and empirical covariance.
    Generate(GenerateArgs),
    /// Compare the full and blockwise single-family solvers.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Penalty family: sgl, ggl or fgl.
    #[arg(long)]
    family: String,
    /// Comma-separated covariance matrix files, one per instance.
    #[arg(long, value_delimiter = ',', required = true)]
    input: Vec<PathBuf>,
    /// Comma-separated sample counts, one per instance.
    #[arg(short = 'N', long = "samples", value_delimiter = ',', required = true)]
    samples: Vec<usize>,
    /// Model latent variables (sparse minus low-rank).
    #[arg(long)]
    latent: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    eps_abs: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps_rel: f64,
    /// Keep rho fixed instead of balancing residuals.
    #[arg(long)]
    fixed_rho: bool,
    /// Solve on the correlation scale and transform back.
    #[arg(long)]
    scale_to_correlation: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            rho_init: self.rho,
            max_iter: self.max_iter,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            adaptive_rho: !self.fixed_rho,
            scale_to_correlation: self.scale_to_correlation,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    lambda1: f64,
    /// Only for the group and fused families.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Nuclear-norm weights (one value, or one per instance); requires --latent.
    #[arg(long, value_delimiter = ',')]
    mu1: Vec<f64>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = crate::selection::DEFAULT_GAMMA)]
    gamma: f64,
    /// Number of lambda1 values in the default grid.
    #[arg(long, default_value_t = 8)]
    grid_size: usize,
    #[arg(long, value_delimiter = ',')]
    lambda1_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda2_grid: Vec<f64>,
    /// Requires --latent.
    #[arg(long, value_delimiter = ',')]
    mu1_grid: Vec<f64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(short = 'p', long = "dim")]
    p: usize,
    #[arg(short = 'N', long = "samples")]
    n: usize,
    #[arg(long)]
    edge_prob: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    weight_min: f64,
    #[arg(long, default_value_t = 0.5)]
    weight_max: f64,
    /// Number of hidden variables marginalized out of the model.
    #[arg(long, default_value_t = 0)]
    latent_confounders: usize,
    /// Probability that a hidden variable links to an observed one.
    #[arg(long, default_value_t = 0.5)]
    latent_prob: f64,
    #[arg(long, default_value_t = 0.2)]
    latent_weight_min: f64,
    #[arg(long, default_value_t = 0.5)]
    latent_weight_max: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![200usize, 500])]
    sizes: Vec<usize>,
    /// Values of lambda1 on the correlation scale.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.2f64, 0.5])]
    lambdas: Vec<f64>,
    #[arg(long)]
    seed: u64,
    /// Expected degree of the synthetic network (edge probability times p).
    #[arg(long, default_value_t = 1.0)]
    degree: f64,
    #[arg(long, default_value_t = 2)]
    samples_per_dim: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Validation(_) | Error::InvalidParameter(_) | Error::Parse(_) => EXIT_INVALID,
            Error::Selection { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INTERNAL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult = std::result::Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    configure_threads();
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a, &argv),
        Command::Select(a) => cmd_select(a, &argv),
        Command::Generate(a) => cmd_generate(a, &argv),
        Command::Benchmark(a) => cmd_benchmark(a, &argv),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn configure_threads() {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if threads > 0 {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn parse_family(s: &str) -> Result<Family, CliError> {
    s.parse::<Family>().map_err(|e| CliError::invalid(e.to_string()))
}

struct LoadedInput {
    cov: CovInput,
    digests: Vec<InputDigest>,
}

fn load_input(problem: &ProblemArgs) -> Result<LoadedInput, CliError> {
    if problem.input.len() != problem.samples.len() {
        return Err(CliError::invalid(format!(
            "{} input files but {} sample counts",
            problem.input.len(),
            problem.samples.len()
        )));
    }
    let mut mats = Vec::new();
    let mut digests = Vec::new();
    for path in &problem.input {
        let m = read_matrix(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        mats.push(m);
        digests.push(InputDigest::of(path).map_err(|e| CliError::invalid(e.to_string()))?);
    }
    let cov = CovInput::new(mats, problem.samples.clone());
    cov.ensure_valid()?;
    Ok(LoadedInput { cov, digests })
}

fn check_family(family: Family, k: usize) -> Result<(), CliError> {
    if family == Family::Sgl && k != 1 {
        return Err(CliError::invalid(format!(
            "--family sgl takes exactly one input, got {k}"
        )));
    }
    Ok(())
}

fn write_solution(
    out: &Path,
    sol: &crate::types::Solution,
    latent: bool,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    for (k, theta) in sol.theta.iter().enumerate() {
        let path = out.join(format!("theta_{k}.csv"));
        write_matrix(&path, theta)?;
        outputs.push(path.display().to_string());
        let path = out.join(format!("edges_{k}.tsv"));
        write_edges(&path, theta, EDGE_TOL)?;
        outputs.push(path.display().to_string());
        if latent {
            let path = out.join(format!("lowrank_{k}.csv"));
            write_matrix(&path, &sol.lowrank[k])?;
            outputs.push(path.display().to_string());
        }
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs, argv: &[String]) -> CliResult {
    let family = parse_family(&args.problem.family)?;
    if family == Family::Sgl && args.lambda2.is_some() {
        return Err(CliError::invalid("--lambda2 is not allowed with --family sgl"));
    }
    if !args.problem.latent && !args.mu1.is_empty() {
        return Err(CliError::invalid("--mu1 requires --latent"));
    }
    if args.problem.latent && args.mu1.is_empty() {
        return Err(CliError::invalid("--latent requires --mu1"));
    }
    let input = load_input(&args.problem)?;
    let k = input.cov.len();
    check_family(family, k)?;
    if family != Family::Sgl && args.lambda2.is_none() {
        return Err(CliError::invalid(format!("--family {family} requires --lambda2")));
    }
    let mut pen = PenaltySpec {
        family,
        lambda1: args.lambda1,
        lambda2: args.lambda2.unwrap_or(0.0),
        latent: false,
        mu1: Vec::new(),
    };
    if args.problem.latent {
        let mu1 = match args.mu1.len() {
            1 => vec![args.mu1[0]; k],
            n if n == k => args.mu1.clone(),
            n => {
                return Err(CliError::invalid(format!(
                    "--mu1 needs 1 or {k} values, got {n}"
                )))
            }
        };
        pen = pen.with_latent(mu1);
    }
    let cfg = args.problem.solver.config();
    let sol = crate::solve(&input.cov, &pen, &cfg)?;

    let out = &args.problem.out;
    let mut outputs = Vec::new();
    write_solution(out, &sol, pen.latent, &mut outputs)?;

    let mut parameters = BTreeMap::new();
    parameters.insert("penalty".to_string(), serde_json::to_value(&pen).unwrap());
    parameters.insert("solver".to_string(), serde_json::to_value(cfg).unwrap());
    let converged = sol.diagnostics.converged;
    let manifest = RunManifest::new("solve", argv, parameters, input.digests, outputs)
        .with_result("diagnostics", serde_json::to_value(sol.diagnostics).unwrap())
        .with_status(converged);
    manifest.write(&out.join("manifest.json"))?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn cmd_select(args: SelectArgs, argv: &[String]) -> CliResult {
    let family = parse_family(&args.problem.family)?;
    if family == Family::Sgl && !args.lambda2_grid.is_empty() {
        return Err(CliError::invalid("--lambda2-grid is not allowed with --family sgl"));
    }
    if !args.problem.latent && !args.mu1_grid.is_empty() {
        return Err(CliError::invalid("--mu1-grid requires --latent"));
    }
    let input = load_input(&args.problem)?;
    check_family(family, input.cov.len())?;
    let cov = &input.cov;
    let lambda1_values = if args.lambda1_grid.is_empty() {
        default_lambda_grid(cov, args.grid_size)?
    } else {
        args.lambda1_grid.clone()
    };
    let lambda2_values = match family {
        Family::Sgl => Vec::new(),
        _ if args.lambda2_grid.is_empty() => default_lambda2_grid(cov, 3)?,
        _ => args.lambda2_grid.clone(),
    };
    let mu1_values = match (args.problem.latent, args.mu1_grid.is_empty()) {
        (false, _) => Vec::new(),
        (true, true) => default_mu1_grid(cov, 4)?,
        (true, false) => args.mu1_grid.clone(),
    };
    let grid = ParameterGrid {
        lambda1_values,
        lambda2_values,
        mu1_values,
        gamma: args.gamma,
    };
    let cfg = args.problem.solver.config();
    let report = grid_search(cov, family, &grid, &cfg)?;

    let out = &args.problem.out;
    let mut outputs = Vec::new();
    let report_json = selection_json(&report, &grid);
    let report_path = out.join("report.json");
    write_atomic(
        &report_path,
        (serde_json::to_string_pretty(&report_json).unwrap() + "\n").as_bytes(),
    )?;
    outputs.push(report_path.display().to_string());
    write_solution(out, &report.solution, grid.latent(), &mut outputs)?;

    let best = report.best_entry();
    let mut parameters = BTreeMap::new();
    parameters.insert("family".to_string(), json!(family));
    parameters.insert("gamma".to_string(), json!(grid.gamma));
    parameters.insert("grid".to_string(), serde_json::to_value(&grid).unwrap());
    parameters.insert("solver".to_string(), serde_json::to_value(cfg).unwrap());
    let converged = report.solution.diagnostics.converged;
    let manifest = RunManifest::new("select", argv, parameters, input.digests, outputs)
        .with_result(
            "selection",
            json!({
                "best_index": report.best,
                "lambda1": best.lambda1,
                "lambda2": best.lambda2,
                "mu1": best.mu1,
                "ebic": best.ebic,
                "edges": best.edges,
                "diagnostics": report.solution.diagnostics,
            }),
        )
        .with_status(converged);
    manifest.write(&out.join("manifest.json"))?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Report layout written by `select`.
pub fn selection_json(report: &crate::selection::SelectionReport, grid: &ParameterGrid) -> Value {
    let entries: Vec<Value> = report
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            json!({
                "index": i,
                "lambda1": e.lambda1,
                "lambda2": e.lambda2,
                "mu1": e.mu1,
                "ebic": e.ebic,
                "edges": e.edges,
                "converged": e.converged,
                "iterations": e.iterations,
                "best": i == report.best,
            })
        })
        .collect();
    json!({
        "family": report.family,
        "gamma": report.gamma,
        "lambda1_grid": grid.lambda1_values,
        "lambda2_grid": grid.lambda2_values,
        "mu1_grid": grid.mu1_values,
        "best": report.best,
        "entries": entries,
    })
}

fn cmd_generate(args: GenerateArgs, argv: &[String]) -> CliResult {
    let weights = (args.weight_min, args.weight_max);
    let out = &args.out;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, m: &crate::types::Matrix| -> Result<(), CliError> {
        let path = out.join(name);
        write_matrix(&path, m)?;
        outputs.push(path.display().to_string());
        Ok(())
    };

    let (truth, edges_of, lowrank) = if args.latent_confounders > 0 {
        let t = generate_latent(
            &LatentParams {
                p: args.p,
                hidden: args.latent_confounders,
                edge_probability: args.edge_prob,
                weight_range: weights,
                latent_probability: args.latent_prob,
                latent_weight_range: (args.latent_weight_min, args.latent_weight_max),
            },
            args.seed,
        )?;
        let mut observed = t.observed.clone();
        observed.precision = t.sparse.clone();
        (observed, t.sparse.clone(), Some(t.lowrank))
    } else {
        let t = generate_precision(args.p, args.edge_prob, weights, args.seed)?;
        let sparse = t.precision.clone();
        (t, sparse, None)
    };
    let s = sample_covariance(&truth, args.n, args.seed.wrapping_add(1))?;

    emit("precision.csv", &truth.precision)?;
    emit("covariance.csv", &truth.covariance)?;
    emit("S.csv", &s)?;
    if let Some(l) = &lowrank {
        emit("lowrank.csv", l)?;
    }
    let edge_path = out.join("edges.tsv");
    write_edges(&edge_path, &edges_of, 1e-10)?;
    outputs.push(edge_path.display().to_string());

    let mut parameters = BTreeMap::new();
    parameters.insert("p".into(), json!(args.p));
    parameters.insert("N".into(), json!(args.n));
    parameters.insert("edge_prob".into(), json!(args.edge_prob));
    parameters.insert("seed".into(), json!(args.seed));
    parameters.insert("weight_range".into(), json!([args.weight_min, args.weight_max]));
    parameters.insert("latent_confounders".into(), json!(args.latent_confounders));
    if args.latent_confounders > 0 {
        parameters.insert("latent_prob".into(), json!(args.latent_prob));
        parameters.insert(
            "latent_weight_range".into(),
            json!([args.latent_weight_min, args.latent_weight_max]),
        );
    }
    parameters.insert("rng".into(), json!(crate::synth::RNG_NAME));
    let manifest = RunManifest::new("generate", argv, parameters, Vec::new(), outputs)
        .with_result("edges", json!(crate::synth::support(&edges_of, 1e-10).len()))
        .with_status(true);
    manifest.write(&out.join("manifest.json"))?;
    Ok(EXIT_OK)
}

fn cmd_benchmark(args: BenchmarkArgs, argv: &[String]) -> CliResult {
    let params = BenchmarkParams {
        sizes: args.sizes,
        lambdas: args.lambdas,
        edge_probability_scale: args.degree,
        samples_per_dim: args.samples_per_dim,
        max_iter: args.max_iter,
        seed: args.seed,
        ..BenchmarkParams::default()
    };
    let rows = run_benchmark(&params)?;
    let table = format_table(&rows);
    print!("{table}");
    let out = &args.out;
    let path = out.join("benchmark.tsv");
    write_atomic(&path, table.as_bytes())?;

    let all_converged = rows.iter().all(|r| r.full_converged && r.block_converged);
    let mut parameters = BTreeMap::new();
    parameters.insert("benchmark".into(), serde_json::to_value(&params).unwrap());
    parameters.insert("rng".into(), json!(crate::synth::RNG_NAME));
    let manifest = RunManifest::new(
        "benchmark",
        argv,
        parameters,
        Vec::new(),
        vec![path.display().to_string()],
    )
    .with_result("rows", serde_json::to_value(&rows).unwrap())
    .with_status(all_converged);
    manifest.write(&out.join("manifest.json"))?;
    Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}
