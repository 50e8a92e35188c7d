//! Command-line interface to the mean, flow and transport solvers.
//!
//! Inputs are JSON files (matrices `{"n": .., "data": [..]}`, measures
//! `{"atoms": [..], "weights": [..]}`); results go to standard output as
//! JSON, or CSV for the sampling experiments. Exit codes: 0 on success,
//! 1 when a solver cannot reach the requested tolerance (the best report is
//! printed), 2 on malformed input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use karcher::error::Error;
use karcher::flow::{self, TrotterOrder};
use karcher::io;
use karcher::lln::{self, SpdLaw};
use karcher::means::{self, SolveReport, SolverConfig};
use karcher::measure::{self, DiscreteMeasure};
use karcher::spd::SpdMatrix;
use karcher::verify::{self, CheckOptions};

#[derive(Parser)]
#[command(
    name = "karcher",
    version,
    about = "Karcher means, Wasserstein transport and nonlinear semigroups on the cone of positive definite matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Largest accepted matrix dimension (the Jacobi eigensolver is tuned
    /// for desk scale).
    #[arg(long, global = true, default_value_t = 64)]
    max_dim: usize,

    /// Seed for randomized subcommands; falls back to KARCHER_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for embarrassingly parallel subcommands.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Forward,
    Reverse,
}

impl From<OrderArg> for TrotterOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Forward => TrotterOrder::Forward,
            OrderArg::Reverse => TrotterOrder::Reverse,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Karcher mean of a measure.
    Mean {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Power mean P_t of a measure, t in (0, 1].
    PowerMean {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Resolvent J_lambda(X): the backward-Euler step toward the mean.
    Resolvent {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        x: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Semigroup evaluation S(t)X by the exponential formula; with --rho
    /// the approximating semigroup driven by the geodesic split map.
    Flow {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        x: PathBuf,
        /// Flow tolerance; the exponential formula costs O(1/tol) resolvent
        /// solves, hence the looser default than the algebraic solvers.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Split step of the approximating semigroup (exact flow if absent).
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, value_enum, default_value = "forward")]
        order: OrderArg,
    },
    /// Trotter product (F_{t/m})^m X of two-point geodesic steps.
    Trotter {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        x: PathBuf,
        #[arg(long, value_enum, default_value = "forward")]
        order: OrderArg,
    },
    /// Exact Wasserstein-1 distance and an optimal coupling.
    Wasserstein {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
    },
    /// Law-of-large-numbers experiment; emits CSV.
    Lln {
        /// Finite law: a measure file to sample from.
        #[arg(long)]
        measure: PathBuf,
        /// Comma-separated ascending sample sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        x: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Tolerance for the flow columns.
        #[arg(long, default_value_t = 1e-5)]
        flow_tol: f64,
    },
    /// Runs the full invariant suite and reports pass/fail counts.
    Check {
        /// Instances per property.
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.or_else(read_env_seed).unwrap_or(0);
    match dispatch(cli, seed) {
        Ok(code) => code,
        Err(e) => report_error(e),
    }
}

fn read_env_seed() -> Option<u64> {
    std::env::var("KARCHER_SEED").ok().and_then(|s| s.parse().ok())
}

enum CliError {
    Input(String),
    Solver { message: String, report: Option<SolveReport> },
}

impl From<io::ParseError> for CliError {
    fn from(e: io::ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MaxIterExceeded { ref report } => CliError::Solver {
                message: e.to_string(),
                report: Some(report.clone()),
            },
            Error::RowFailed { ref source, .. } => {
                if let Error::MaxIterExceeded { report } = source.as_ref() {
                    CliError::Solver { message: e.to_string(), report: Some(report.clone()) }
                } else {
                    CliError::Input(e.to_string())
                }
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

fn report_error(e: CliError) -> ExitCode {
    match e {
        CliError::Input(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        CliError::Solver { message, report } => {
            eprintln!("error: {message}");
            if let Some(r) = report {
                eprintln!("best report: {}", report_json(&r));
            }
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_matrix(path: &Path, max_dim: usize) -> Result<SpdMatrix, CliError> {
    let m = io::parse_matrix(&read_file(path)?)?;
    check_dim(m.dim(), max_dim)?;
    Ok(m)
}

fn load_measure(path: &Path, max_dim: usize) -> Result<DiscreteMeasure, CliError> {
    let m = io::parse_measure(&read_file(path)?)?;
    check_dim(m.dim(), max_dim)?;
    Ok(m)
}

fn check_dim(dim: usize, max_dim: usize) -> Result<(), CliError> {
    if dim > max_dim {
        return Err(CliError::Input(format!(
            "dimension {dim} exceeds the configured limit {max_dim} (raise with --max-dim)"
        )));
    }
    Ok(())
}

fn report_json(r: &SolveReport) -> String {
    format!(
        "{{\"iterations\":{},\"residual\":{},\"certified_bound\":{}}}",
        r.iterations,
        io::fmt_f64(r.residual),
        r.certified_bound.map_or_else(|| "null".into(), io::fmt_f64),
    )
}

fn dispatch(cli: Cli, seed: u64) -> Result<ExitCode, CliError> {
    let max_dim = cli.max_dim;
    match cli.command {
        Command::Mean { measure, tol } => {
            let mu = load_measure(&measure, max_dim)?;
            let cfg = SolverConfig::default().with_tol(tol);
            let (mean, report) = means::karcher_mean(&mu, &cfg)?;
            println!(
                "{{\"mean\":{},\"report\":{}}}",
                io::write_matrix(&mean),
                report_json(&report)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::PowerMean { measure, t, tol } => {
            let mu = load_measure(&measure, max_dim)?;
            let cfg = SolverConfig::default().with_tol(tol);
            let (mean, report) = means::power_mean(&mu, t, &cfg)?;
            println!(
                "{{\"mean\":{},\"report\":{}}}",
                io::write_matrix(&mean),
                report_json(&report)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Resolvent { measure, lambda, x, tol } => {
            let mu = load_measure(&measure, max_dim)?;
            let x = load_matrix(&x, max_dim)?;
            let cfg = SolverConfig::default().with_tol(tol);
            let state = means::resolvent(&mu, lambda, &x, &cfg)?;
            println!("{{\"state\":{}}}", io::write_matrix(&state));
            Ok(ExitCode::SUCCESS)
        }
        Command::Flow { measure, t, x, tol, rho, order } => {
            let mu = load_measure(&measure, max_dim)?;
            let x = load_matrix(&x, max_dim)?;
            let cfg = SolverConfig::default();
            let result = match rho {
                None => flow::evolve(&mu, t, &x, tol, &cfg)?,
                Some(rho) => {
                    if !mu.is_uniform() {
                        return Err(CliError::Input(
                            "the split map needs a uniform measure".into(),
                        ));
                    }
                    let f = flow::trotter_map(mu.atoms(), rho, order.into())?;
                    flow::approx_evolve(&f, t, &x, tol)?
                }
            };
            println!(
                "{{\"state\":{},\"n_used\":{},\"error_bound\":{}}}",
                io::write_matrix(&result.state),
                result.n_used,
                io::fmt_f64(result.error_bound)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Trotter { measure, t, m, x, order } => {
            let mu = load_measure(&measure, max_dim)?;
            let x = load_matrix(&x, max_dim)?;
            if !mu.is_uniform() {
                return Err(CliError::Input("the split map needs a uniform measure".into()));
            }
            let state = flow::trotter_product(mu.atoms(), t, m, &x, order.into())?;
            println!("{{\"state\":{},\"m\":{m}}}", io::write_matrix(&state));
            Ok(ExitCode::SUCCESS)
        }
        Command::Wasserstein { mu, nu } => {
            let mu = load_measure(&mu, max_dim)?;
            let nu = load_measure(&nu, max_dim)?;
            let (cost, coupling) = measure::w1(&mu, &nu)?;
            println!(
                "{{\"cost\":{},\"coupling\":{}}}",
                io::fmt_f64(cost),
                io::write_coupling(&coupling)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Lln { measure, sizes, t, x, tol, flow_tol } => {
            let law = SpdLaw::Finite(load_measure(&measure, max_dim)?);
            let x = load_matrix(&x, max_dim)?;
            let cfg = SolverConfig::default().with_tol(tol);
            let report = lln::run(&law, &sizes, t, &x, seed, &cfg, flow_tol, cli.threads)?;
            print!("{}", lln::to_csv(&report));
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { instances } => {
            let opts = CheckOptions { seed, instances };
            let results = verify::run_all_parallel(&opts, cli.threads);
            let mut failed = 0usize;
            for r in &results {
                println!("{}", r.summary_line());
                if !r.passed {
                    failed += 1;
                }
            }
            println!(
                "{} checks: {} passed, {} failed",
                results.len(),
                results.len() - failed,
                failed
            );
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
