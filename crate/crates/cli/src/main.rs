//! `multicover` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 internal invariant or bound violation, 4 exact search out of budget.

mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use multicover::cover::{solve_with, SolveOptions};
use multicover::model::generate;
use multicover::oracle::{exact_mcmc, ratio_report, Limits};
use multicover::outer_cover::solve_outer_cover;
use multicover::{Error, GeneratorParams, Instance, KappaMode, Norm, Solution};
use serde::Serialize;

pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "multicover", version, about = "Minimum-cost multi-cover with disks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Compute a feasible radius assignment.
    Solve(SolveArgs),
    /// Check a solution against an instance.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Outer cover of all clients with positive demand (L∞).
    Outercover {
        instance: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact optimum by branch-and-bound (small instances only).
    Oracle(OracleArgs),
    /// Batch generate/solve/check with a JSON and CSV report.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 10)]
    clients: usize,
    #[arg(long, default_value_t = 6)]
    servers: usize,
    /// Every client demands exactly this many disks.
    #[arg(long, conflicts_with = "kmax")]
    k: Option<usize>,
    /// Each client demands a uniform value in 0..=KMAX.
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value = "linf")]
    norm: Norm,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 100.0)]
    hi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Shrink radii to the smallest feasible values after solving.
    #[arg(long)]
    shrink: bool,
    /// Include the per-level trace in the solution file.
    #[arg(long)]
    trace: bool,
    /// Re-check every outer cover's dual certificate.
    #[arg(long)]
    certify: bool,
    /// Solve under this norm instead of the instance's.
    #[arg(long)]
    norm: Option<Norm>,
    /// Override the instance exponent.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 50_000_000)]
    max_nodes: u64,
    #[arg(long, default_value_t = 60.0)]
    max_secs: f64,
    /// Also run the solver and report the approximation ratio.
    #[arg(long)]
    compare: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Invariant(_) => EXIT_INVARIANT,
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

pub fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

pub fn debug_asserts_enabled() -> bool {
    cfg!(debug_assertions) || std::env::var("MULTICOVER_DEBUG_ASSERTS").is_ok_and(|v| v == "1")
}

pub fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    Ok(Instance::from_json(&text)?)
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode, Failure> {
    let kappa = match (a.k, a.kmax) {
        (Some(k), _) => KappaMode::Uniform(k),
        (None, Some(k)) => KappaMode::RandomMax(k),
        (None, None) => KappaMode::Uniform(1),
    };
    let inst = generate(&GeneratorParams {
        n_clients: a.clients,
        n_servers: a.servers,
        dim: a.dim,
        kappa,
        coord_range: (a.lo, a.hi),
        alpha: a.alpha,
        norm: a.norm,
        seed: a.seed,
    })?;
    emit(a.output.as_deref(), &inst.to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode, Failure> {
    let mut inst = load(&a.instance)?;
    if let Some(n) = a.norm {
        inst.norm = n;
    }
    if let Some(alpha) = a.alpha {
        inst.alpha = alpha;
        inst.ensure_valid()?;
    }
    let opts = SolveOptions { shrink: a.shrink, geometric_asserts: debug_asserts_enabled(), certify: a.certify };
    let (radii, trace) = solve_with(&inst, &opts)?;
    let mut sol = Solution::new(radii, inst.alpha, inst.norm);
    if a.trace {
        sol.trace = Some(trace);
    }
    emit(a.output.as_deref(), &sol.to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(instance: &Path, solution: &Path) -> Result<ExitCode, Failure> {
    let inst = load(instance)?;
    let text = fs::read_to_string(solution)
        .map_err(|e| input_error(format!("cannot read {}: {e}", solution.display())))?;
    let sol = Solution::from_json(&text)?;
    match inst.first_uncovered(&sol.radii)? {
        None => {
            println!("feasible: every client meets its demand");
            Ok(ExitCode::SUCCESS)
        }
        Some(j) => {
            let have = inst.coverage_count(&sol.radii, j)?;
            println!("infeasible: client {j} covered {have} times, demand {}", inst.kappa[j]);
            Ok(ExitCode::from(EXIT_INFEASIBLE))
        }
    }
}

#[derive(Serialize)]
struct OuterCoverOut {
    rho: Vec<f64>,
    dual_lower_bound: f64,
    #[serde(rename = "F")]
    family: Vec<(usize, f64)>,
}

fn cmd_outercover(instance: &Path, output: Option<&Path>) -> Result<ExitCode, Failure> {
    let inst = load(instance)?;
    let clients: Vec<usize> = (0..inst.num_clients()).filter(|&j| inst.kappa[j] > 0).collect();
    let oc = solve_outer_cover(&inst, &inst.kappa, &clients)?;
    let out = OuterCoverOut {
        rho: oc.rho,
        dual_lower_bound: oc.dual_lower_bound,
        family: oc.family.iter().map(|d| (d.server, d.radius)).collect(),
    };
    emit(output, &serde_json::to_string_pretty(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> Result<ExitCode, Failure> {
    let inst = load(&a.instance)?;
    if !(a.max_secs > 0.0) {
        return Err(input_error("--max-secs must be positive"));
    }
    let limits = Limits { max_nodes: a.max_nodes, max_time: Some(Duration::from_secs_f64(a.max_secs)) };
    let result = if a.compare {
        ratio_report(&inst, limits).and_then(|r| Ok(serde_json::to_string_pretty(&r)?))
    } else {
        exact_mcmc(&inst, limits).and_then(|r| Ok(serde_json::to_string_pretty(&r)?))
    };
    match result {
        Ok(text) => {
            emit(a.output.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(Error::BudgetExceeded { nodes }) => {
            let text = serde_json::json!({ "status": "budget_exceeded", "nodes": nodes });
            emit(a.output.as_deref(), &serde_json::to_string_pretty(&text)?)?;
            Ok(ExitCode::from(EXIT_BUDGET))
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify { instance, solution } => cmd_verify(&instance, &solution),
        Command::Outercover { instance, output } => cmd_outercover(&instance, output.as_deref()),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
