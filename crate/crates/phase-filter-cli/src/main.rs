//! Command-line surface for the phase-filter solvers.
//!
//! Every command is a pure function of its arguments (and seed): identical
//! invocations produce byte-identical data files. Each data file written with
//! `--out` is accompanied by `<out>.manifest.json` recording the command,
//! parameters, tool version, seed and timestamp; timestamps live only there.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phase_filter::filter_design::{self, FilterProblem};
use phase_filter::{fock::FockVector, optimal_state, oracle, phase_sim, PhaseError};

const EXIT_ARG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "phase-filter", version, about = "Optimal deterministic and probabilistic measurements of optical phase")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal phase-encoding states for the given Fock-space dimensions
    OptimalState {
        /// Comma-separated list of N values (state lives in N+1 levels)
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal probabilistic filter for a coherent state
    Filter {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        prob: f64,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// μ versus success probability trade-off curve
    Tradeoff {
        #[arg(long)]
        alpha: f64,
        /// Number of P-grid points, log-spaced from 1 down to the floor
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal threshold N over an (α, P) grid
    RegionMap {
        #[arg(long, default_value_t = 0.1)]
        alpha_lo: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha_hi: f64,
        #[arg(long, default_value_t = 0.05)]
        p_lo: f64,
        #[arg(long, default_value_t = 1.0)]
        p_hi: f64,
        /// Grid points per axis
        #[arg(long, default_value_t = 40)]
        grid: usize,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo canonical phase measurement of the (optionally filtered) state
    Simulate {
        #[arg(long)]
        alpha: f64,
        /// Target success probability, or "none" for the unfiltered state
        #[arg(long, default_value = "none")]
        prob: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Where to write the sampled angles (column: theta)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force maximizer audit runs
    Oracle {
        /// Unconstrained problem size N (path-graph maximizer)
        #[arg(long, conflicts_with_all = ["alpha", "prob"])]
        n: Option<usize>,
        /// Coherent amplitude for the constrained maximizer
        #[arg(long, requires = "prob")]
        alpha: Option<f64>,
        #[arg(long, requires = "alpha")]
        prob: Option<f64>,
        /// Truncation dimension for the constrained maximizer
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.downcast_ref::<PhaseError>() {
                Some(PhaseError::InvalidArgument(_)) => EXIT_ARG,
                Some(PhaseError::InfeasibleProbability { .. }) => EXIT_INFEASIBLE,
                Some(_) => EXIT_INTERNAL,
                None => EXIT_INTERNAL,
            };
            ExitCode::from(code)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(command: Command) -> Result<(), AnyError> {
    match command {
        Command::OptimalState { dims, format, out } => cmd_optimal_state(&dims, format, out),
        Command::Filter { alpha, prob, n_max, format, out } => {
            cmd_filter(alpha, prob, n_max, format, out)
        }
        Command::Tradeoff { alpha, grid, n_max, format, out } => {
            cmd_tradeoff(alpha, grid, n_max, format, out)
        }
        Command::RegionMap { alpha_lo, alpha_hi, p_lo, p_hi, grid, n_max, format, out } => {
            cmd_region_map(alpha_lo, alpha_hi, p_lo, p_hi, grid, n_max, format, out)
        }
        Command::Simulate { alpha, prob, samples, seed, n_max, format, out } => {
            cmd_simulate(alpha, &prob, samples, seed, n_max, format, out)
        }
        Command::Oracle { n, alpha, prob, dim, format, out } => {
            cmd_oracle(n, alpha, prob, dim, format, out)
        }
    }
}

/// 17 significant digits: round-trip exact for f64.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    params: BTreeMap<String, String>,
    tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    timestamp: String,
}

impl RunManifest {
    fn new(command: &str, params: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            params,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

/// Write `data` to `out` (or stdout) and, for file output, the manifest next
/// to it.
fn emit(data: &str, out: Option<PathBuf>, manifest: &RunManifest) -> Result<(), AnyError> {
    match out {
        Some(path) => {
            std::fs::write(&path, data)?;
            let mpath = path.with_extension(format!(
                "{}manifest.json",
                path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
            ));
            std::fs::write(mpath, serde_json::to_string_pretty(manifest)?)?;
        }
        None => print!("{data}"),
    }
    Ok(())
}

fn cmd_optimal_state(
    dims: &[usize],
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), AnyError> {
    if dims.is_empty() {
        return Err(Box::new(PhaseError::InvalidArgument("need at least one dim".into())));
    }
    let mut solutions = Vec::new();
    for &n in dims {
        solutions.push((n, optimal_state::optimal_state(n)?));
    }
    let data = match format {
        Format::Csv => {
            let mut s = String::from("dim,lambda,mu,n,coeff\r\n");
            for (n, sol) in &solutions {
                for (k, &c) in sol.state.coeffs().iter().enumerate() {
                    writeln!(
                        s,
                        "{},{},{},{},{}\r",
                        n,
                        fmt_f(sol.lambda),
                        fmt_f(sol.mu),
                        k,
                        fmt_f(c)
                    )?;
                }
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                schema_version: u32,
                dim: usize,
                lambda: f64,
                mu: f64,
                coeffs: Vec<f64>,
            }
            let rows: Vec<Row> = solutions
                .iter()
                .map(|(n, sol)| Row {
                    schema_version: 1,
                    dim: *n,
                    lambda: sol.lambda,
                    mu: sol.mu,
                    coeffs: sol.state.coeffs().to_vec(),
                })
                .collect();
            serde_json::to_string_pretty(&rows)? + "\n"
        }
    };
    let params = BTreeMap::from([(
        "dims".to_string(),
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
    )]);
    emit(&data, out, &RunManifest::new("optimal-state", params, None))
}

fn cmd_filter(
    alpha: f64,
    prob: f64,
    n_max: usize,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), AnyError> {
    let state = FockVector::coherent(alpha, 1e-12)?;
    let baseline = state.mu();
    let problem = FilterProblem::new(state, prob)?;
    let sol = filter_design::optimal_filter(&problem, n_max).map_err(|e| {
        if matches!(e, PhaseError::InfeasibleProbability { .. }) {
            let n_cap = n_max.min(problem.state().trunc_dim() - 1);
            let floor = filter_design::feasibility_floor(&problem, n_cap);
            eprintln!("feasibility floor at N = {n_cap}: P ≥ {}", fmt_f(floor));
        }
        Box::new(e) as AnyError
    })?;
    let f_seq: Vec<f64> = (0..problem.state().trunc_dim())
        .map(|k| sol.filter.transmission(k))
        .collect();
    let data = match format {
        Format::Csv => {
            let mut s = String::from(
                "threshold,lambda,achieved_prob,mu_out,mu_deterministic,n,f_n\r\n",
            );
            for (k, &f) in f_seq.iter().enumerate() {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}\r",
                    sol.threshold,
                    fmt_f(sol.lambda),
                    fmt_f(sol.achieved_prob),
                    fmt_f(sol.mu_out),
                    fmt_f(baseline),
                    k,
                    fmt_f(f)
                )?;
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                alpha: f64,
                prob: f64,
                threshold: usize,
                lambda: f64,
                f: Vec<f64>,
                achieved_prob: f64,
                mu_out: f64,
                mu_deterministic: f64,
            }
            serde_json::to_string_pretty(&Out {
                schema_version: 1,
                alpha,
                prob,
                threshold: sol.threshold,
                lambda: sol.lambda,
                f: f_seq,
                achieved_prob: sol.achieved_prob,
                mu_out: sol.mu_out,
                mu_deterministic: baseline,
            })? + "\n"
        }
    };
    let params = BTreeMap::from([
        ("alpha".to_string(), fmt_f(alpha)),
        ("prob".to_string(), fmt_f(prob)),
        ("n_max".to_string(), n_max.to_string()),
    ]);
    emit(&data, out, &RunManifest::new("filter", params, None))
}

fn tradeoff_rows(
    alpha: f64,
    p_grid: usize,
    n_max: usize,
) -> Result<Vec<(f64, f64, usize, f64)>, AnyError> {
    let state = FockVector::coherent(alpha, 1e-12)?;
    let n_cap = n_max.min(state.trunc_dim() - 1);
    let floor = {
        let probe = FilterProblem::new(state.clone(), 0.5)?;
        filter_design::feasibility_floor(&probe, n_cap)
    };
    // log-spaced from 1 down to the feasibility floor at n_max, but not into
    // the regime where P is comparable to the truncated tail mass and the
    // fixed-dimension results stop being meaningful
    let p_min = (floor * 1.05).max(1e-4).min(1.0);
    let mut rows = Vec::with_capacity(p_grid);
    for i in 0..p_grid {
        let t = if p_grid == 1 { 0.0 } else { i as f64 / (p_grid - 1) as f64 };
        let p = (t * p_min.ln()).exp();
        let problem = FilterProblem::new(state.clone(), p)?;
        let sol = filter_design::optimal_filter(&problem, n_max)?;
        rows.push((p, sol.mu_out, sol.threshold, sol.lambda));
    }
    Ok(rows)
}

fn cmd_tradeoff(
    alpha: f64,
    grid: usize,
    n_max: usize,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), AnyError> {
    let rows = tradeoff_rows(alpha, grid, n_max)?;
    let data = match format {
        Format::Csv => {
            let mut s = String::from("P,mu_opt,N_opt,lambda\r\n");
            for (p, mu, n, lambda) in &rows {
                writeln!(s, "{},{},{},{}\r", fmt_f(*p), fmt_f(*mu), n, fmt_f(*lambda))?;
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                p: f64,
                mu_opt: f64,
                n_opt: usize,
                lambda: f64,
            }
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                alpha: f64,
                rows: Vec<Row>,
            }
            let rows = rows
                .iter()
                .map(|&(p, mu_opt, n_opt, lambda)| Row { p, mu_opt, n_opt, lambda })
                .collect();
            serde_json::to_string_pretty(&Out { schema_version: 1, alpha, rows })? + "\n"
        }
    };
    let params = BTreeMap::from([
        ("alpha".to_string(), fmt_f(alpha)),
        ("grid".to_string(), grid.to_string()),
        ("n_max".to_string(), n_max.to_string()),
    ]);
    emit(&data, out, &RunManifest::new("tradeoff", params, None))
}

#[allow(clippy::too_many_arguments)]
fn cmd_region_map(
    alpha_lo: f64,
    alpha_hi: f64,
    p_lo: f64,
    p_hi: f64,
    grid: usize,
    n_max: usize,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), AnyError> {
    if grid < 1 {
        return Err(Box::new(PhaseError::InvalidArgument("grid must be ≥ 1".into())));
    }
    let axis = |lo: f64, hi: f64, i: usize| {
        if grid == 1 { lo } else { lo + (hi - lo) * i as f64 / (grid - 1) as f64 }
    };
    // row-major over (alpha, P)
    let mut rows: Vec<(f64, f64, Option<usize>)> = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let alpha = axis(alpha_lo, alpha_hi, i);
        let state = FockVector::coherent(alpha, 1e-12)?;
        for j in 0..grid {
            let p = axis(p_lo, p_hi, j);
            let problem = FilterProblem::new(state.clone(), p)?;
            let n_opt = match filter_design::optimal_filter(&problem, n_max) {
                Ok(sol) => Some(sol.threshold),
                Err(PhaseError::InfeasibleProbability { .. }) => None,
                Err(e) => return Err(Box::new(e)),
            };
            rows.push((alpha, p, n_opt));
        }
    }
    let data = match format {
        Format::Csv => {
            let mut s = String::from("alpha,P,N_opt\r\n");
            for (alpha, p, n_opt) in &rows {
                let n = n_opt.map(|n| n.to_string()).unwrap_or_default();
                writeln!(s, "{},{},{}\r", fmt_f(*alpha), fmt_f(*p), n)?;
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                alpha: f64,
                p: f64,
                n_opt: Option<usize>,
            }
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                rows: Vec<Row>,
            }
            let rows = rows.iter().map(|&(alpha, p, n_opt)| Row { alpha, p, n_opt }).collect();
            serde_json::to_string_pretty(&Out { schema_version: 1, rows })? + "\n"
        }
    };
    let params = BTreeMap::from([
        ("alpha_lo".to_string(), fmt_f(alpha_lo)),
        ("alpha_hi".to_string(), fmt_f(alpha_hi)),
        ("p_lo".to_string(), fmt_f(p_lo)),
        ("p_hi".to_string(), fmt_f(p_hi)),
        ("grid".to_string(), grid.to_string()),
        ("n_max".to_string(), n_max.to_string()),
    ]);
    emit(&data, out, &RunManifest::new("region-map", params, None))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    alpha: f64,
    prob: &str,
    samples: usize,
    seed: u64,
    n_max: usize,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), AnyError> {
    let state = FockVector::coherent(alpha, 1e-12)?;
    let (measured, predicted_mu, prob_value) = if prob == "none" {
        (state.clone(), state.mu(), None)
    } else {
        let p: f64 = prob
            .parse()
            .map_err(|_| PhaseError::InvalidArgument(format!("bad probability {prob:?}")))?;
        if (p - 1.0).abs() < 1e-12 {
            (state.clone(), state.mu(), Some(1.0))
        } else {
            let problem = FilterProblem::new(state.clone(), p)?;
            let sol = filter_design::optimal_filter(&problem, n_max)?;
            let (filtered, _) = state.apply_filter(&sol.filter)?;
            (filtered, sol.mu_out, Some(p))
        }
    };
    let batch = phase_sim::sample_canonical(&measured, samples, seed)?;
    let (mu_hat, std_err) = phase_sim::estimate_mu(&batch)?;

    // sampled angles are the data file; the estimate summary goes to stderr
    // so the data stays byte-identical across runs
    let data = match format {
        Format::Csv => {
            let mut s = String::from("theta\r\n");
            for t in &batch.thetas {
                writeln!(s, "{}\r", fmt_f(*t))?;
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                mu_hat: f64,
                std_err: f64,
                predicted_mu: f64,
                thetas: Vec<f64>,
            }
            serde_json::to_string_pretty(&Out {
                schema_version: 1,
                mu_hat,
                std_err,
                predicted_mu,
                thetas: batch.thetas.clone(),
            })? + "\n"
        }
    };
    eprintln!(
        "mu_hat = {} ± {} (predicted {})",
        fmt_f(mu_hat),
        fmt_f(std_err),
        fmt_f(predicted_mu)
    );
    let mut params = BTreeMap::from([
        ("alpha".to_string(), fmt_f(alpha)),
        ("samples".to_string(), samples.to_string()),
        ("prob".to_string(), prob.to_string()),
        ("rng".to_string(), batch.state_id.clone()),
    ]);
    if let Some(p) = prob_value {
        params.insert("prob_value".to_string(), fmt_f(p));
    }
    emit(&data, out, &RunManifest::new("simulate", params, Some(seed)))
}

fn cmd_oracle(
    n: Option<usize>,
    alpha: Option<f64>,
    prob: Option<f64>,
    dim: usize,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), AnyError> {
    let (result, mut params) = match (n, alpha, prob) {
        (Some(n), None, None) => (
            oracle::maximize_mu_unconstrained(n)?,
            BTreeMap::from([("n".to_string(), n.to_string())]),
        ),
        (None, Some(alpha), Some(prob)) => {
            let state = FockVector::coherent(alpha, 1e-12)?;
            (
                oracle::maximize_mu_constrained(&state, prob, dim)?,
                BTreeMap::from([
                    ("alpha".to_string(), fmt_f(alpha)),
                    ("prob".to_string(), fmt_f(prob)),
                    ("dim".to_string(), dim.to_string()),
                ]),
            )
        }
        _ => {
            return Err(Box::new(PhaseError::InvalidArgument(
                "pass either --n, or --alpha with --prob".into(),
            )))
        }
    };
    if let Some(p) = &result.rng_provenance {
        params.insert("rng".to_string(), p.clone());
    }
    let data = match format {
        Format::Csv => {
            let mut s = String::from("best_value,iterations,converged,index,vector\r\n");
            for (k, v) in result.best_vector.iter().enumerate() {
                writeln!(
                    s,
                    "{},{},{},{},{}\r",
                    fmt_f(result.best_value),
                    result.iterations,
                    result.converged,
                    k,
                    fmt_f(*v)
                )?;
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                schema_version: u32,
                best_value: f64,
                best_vector: Vec<f64>,
                iterations: usize,
                converged: bool,
                rng_provenance: Option<String>,
            }
            serde_json::to_string_pretty(&Out {
                schema_version: 1,
                best_value: result.best_value,
                best_vector: result.best_vector.clone(),
                iterations: result.iterations,
                converged: result.converged,
                rng_provenance: result.rng_provenance.clone(),
            })? + "\n"
        }
    };
    emit(&data, out, &RunManifest::new("oracle", params, None))
}
