//! Batch runs: generate, solve, check invariants and optionally compare with
//! the exact optimum.
//!
//! CSV columns, in order: `id, fingerprint, dim, n_clients, n_servers,
//! max_kappa, alpha, norm, alg_cost, dual_lower_bound_sum, oracle_cost,
//! ratio, wall_ms`. The two oracle columns are empty without `--with-oracle`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Args;
use multicover::cover::{solve_with, SolveOptions};
use multicover::model::{cost, generate};
use multicover::oracle::{exact_mcmc, ratio, ratio_bound, Limits};
use multicover::{Error, GeneratorParams, KappaMode, Norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::{debug_asserts_enabled, emit, input_error, Failure, EXIT_INVARIANT};

#[derive(Args)]
pub struct BenchArgs {
    /// Number of instances.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 6)]
    max_servers: usize,
    #[arg(long, default_value_t = 8)]
    max_clients: usize,
    /// Dimensions to draw from, e.g. `--dims 1,2,3`.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    dims: Vec<usize>,
    /// Exponents to draw from, e.g. `--alphas 1,2,3`.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    alphas: Vec<f64>,
    /// Norms to draw from.
    #[arg(long, value_delimiter = ',', default_value = "linf")]
    norms: Vec<Norm>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the exact solver on every instance.
    #[arg(long)]
    with_oracle: bool,
    #[arg(long, default_value_t = 5_000_000)]
    oracle_max_nodes: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub id: usize,
    pub fingerprint: String,
    pub dim: usize,
    pub n_clients: usize,
    pub n_servers: usize,
    pub max_kappa: usize,
    pub alpha: f64,
    pub norm: Norm,
    pub alg_cost: f64,
    pub dual_lower_bound_sum: f64,
    pub oracle_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub id: usize,
    pub fingerprint: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub max_ratio: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub violations_count: usize,
    pub violations: Vec<Violation>,
}

fn params_for(args: &BenchArgs, id: usize) -> GeneratorParams {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_mul(1_000_003).wrapping_add(id as u64));
    let n_servers = rng.gen_range(1..=args.max_servers);
    let n_clients = rng.gen_range(1..=args.max_clients);
    let k = rng.gen_range(0..=n_servers);
    GeneratorParams {
        n_clients,
        n_servers,
        dim: args.dims[rng.gen_range(0..args.dims.len())],
        kappa: if rng.gen_bool(0.5) { KappaMode::Uniform(k) } else { KappaMode::RandomMax(k) },
        coord_range: (0.0, 100.0),
        alpha: args.alphas[rng.gen_range(0..args.alphas.len())],
        norm: args.norms[rng.gen_range(0..args.norms.len())],
        seed: rng.gen(),
    }
}

fn run_one(args: &BenchArgs, id: usize) -> Result<(BenchRow, Vec<String>), Error> {
    let inst = generate(&params_for(args, id))?;
    let start = Instant::now();
    let opts = SolveOptions { shrink: false, geometric_asserts: debug_asserts_enabled(), certify: true };
    let mut problems = Vec::new();
    let mut row = BenchRow {
        id,
        fingerprint: inst.fingerprint(),
        dim: inst.dim,
        n_clients: inst.num_clients(),
        n_servers: inst.num_servers(),
        max_kappa: inst.max_kappa(),
        alpha: inst.alpha,
        norm: inst.norm,
        alg_cost: f64::NAN,
        dual_lower_bound_sum: 0.0,
        oracle_cost: None,
        ratio: None,
        wall_ms: 0.0,
    };
    match solve_with(&inst, &opts) {
        Ok((radii, trace)) => {
            row.alg_cost = cost(&radii, inst.alpha);
            row.dual_lower_bound_sum = trace.dual_lower_bounds().iter().sum();
            if !inst.is_feasible(&radii)? {
                problems.push("solution is infeasible".to_string());
            }
            for l in trace.levels.iter().filter(|l| l.increase > l.bound * (1.0 + 1e-9)) {
                problems.push(format!("level {}: increase {} exceeds {}", l.level, l.increase, l.bound));
            }
        }
        Err(Error::Invariant(m)) => problems.push(m),
        Err(e) => return Err(e),
    }
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if args.with_oracle && problems.is_empty() {
        let limits = Limits { max_nodes: args.oracle_max_nodes, max_time: Some(Duration::from_secs(120)) };
        match exact_mcmc(&inst, limits) {
            Ok(rep) => {
                let q = ratio(row.alg_cost, rep.cost);
                let bound = ratio_bound(inst.dim, inst.alpha, inst.norm);
                if q > bound {
                    problems.push(format!("ratio {q} exceeds bound {bound}"));
                }
                row.oracle_cost = Some(rep.cost);
                row.ratio = Some(q);
            }
            Err(Error::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((row, problems))
}

pub fn build_report(args: &BenchArgs) -> Result<BenchReport, Error> {
    let results: Vec<_> = (0..args.count).into_par_iter().map(|id| run_one(args, id)).collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut violations = Vec::new();
    for r in results {
        let (row, problems) = r?;
        violations.extend(problems.into_iter().map(|message| Violation {
            id: row.id,
            fingerprint: row.fingerprint.clone(),
            message,
        }));
        rows.push(row);
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let max_ratio = ratios.iter().copied().reduce(f64::max);
    let mean_ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    Ok(BenchReport { rows, max_ratio, mean_ratio, violations_count: violations.len(), violations })
}

pub fn run(args: BenchArgs) -> Result<ExitCode, Failure> {
    if args.max_servers == 0 || args.max_clients == 0 {
        return Err(input_error("--max-servers and --max-clients must be at least 1"));
    }
    if args.dims.is_empty() || args.alphas.is_empty() || args.norms.is_empty() {
        return Err(input_error("--dims, --alphas and --norms need at least one value"));
    }
    let report = if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| input_error(e.to_string()))?
            .install(|| build_report(&args))?
    } else {
        build_report(&args)?
    };

    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| input_error(e.to_string()))?;
        for row in &report.rows {
            w.serialize(row).map_err(|e| input_error(e.to_string()))?;
        }
        w.flush()?;
    }
    emit(args.json.as_deref(), &serde_json::to_string_pretty(&report)?)?;

    if report.violations_count > 0 {
        for v in &report.violations {
            eprintln!("violation in instance {} ({}): {}", v.id, v.fingerprint, v.message);
        }
        return Ok(ExitCode::from(EXIT_INVARIANT));
    }
    Ok(ExitCode::SUCCESS)
}
