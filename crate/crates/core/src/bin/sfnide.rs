//! Command-line entry point: `solve`, `converge`, `gronwall`, `quadrature`.
//!
//! Every subcommand reads a key=value config file, validates it fully
//! before any computation, writes a `run_meta.txt` provenance file first,
//! and then writes its CSV/SVG outputs. Exit codes: 0 success, 1 config
//! error, 2 numeric failure, 3 I/O error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use sfnide::brownian::{sample_path, GENERATOR_NAME};
use sfnide::config::{parse_config, RunConfig, Subcommand};
use sfnide::error::Error;
use sfnide::gronwall::{
    gronwall_bound, Coefficient, GronwallProblem, Inhomogeneity, SeriesPolicy,
};
use sfnide::harness::{run_study, StudyParams};
use sfnide::model::Grid;
use sfnide::quadrature::{build_jacobi_rule, integrate};
use sfnide::solver::{em_solve, em_solve_batch, KernelRules};
use sfnide::specialfn::beta;

#[derive(Parser)]
#[command(name = "sfnide", version, about = "Euler-Maruyama solver and convergence toolkit for stochastic fractional integro-differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's worker count (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Run the Euler-Maruyama scheme: one trajectory CSV or batch moments.
    Solve(CommonArgs),
    /// Coupled-path strong-convergence study with rate fit and SVG plot.
    Converge(CommonArgs),
    /// Evaluate the multi-kernel Gronwall series bound on query times.
    Gronwall(CommonArgs),
    /// Dump Gauss-Jacobi nodes/weights and the moment-validation table.
    Quadrature(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, args) = match &cli.command {
        Command::Solve(a) => (Subcommand::Solve, a),
        Command::Converge(a) => (Subcommand::Converge, a),
        Command::Gronwall(a) => (Subcommand::Gronwall, a),
        Command::Quadrature(a) => (Subcommand::Quadrature, a),
    };
    match run(sub, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = match e.exit_code() {
                1 => "config",
                3 => "io",
                _ => "numeric",
            };
            eprintln!("error:{category}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(sub: Subcommand, args: &CommonArgs) -> Result<(), Error> {
    let mut config = parse_config(&args.config, Some(sub))?;
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::evaluation("main", format!("worker pool: {e}")))?;

    // provenance first, so partial failures are attributable
    std::fs::create_dir_all(&config.output_dir)?;
    std::fs::write(config.output_dir.join("run_meta.txt"), config.emit())?;

    pool.install(|| match sub {
        Subcommand::Solve => cmd_solve(&config),
        Subcommand::Converge => cmd_converge(&config),
        Subcommand::Gronwall => cmd_gronwall(&config),
        Subcommand::Quadrature => cmd_quadrature(&config),
    })
}

fn metadata_header(config: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# generator={GENERATOR_NAME}");
    let _ = writeln!(out, "# seed={}", config.seed);
    let _ = writeln!(out, "# problem={}", config.problem.as_str());
    let _ = writeln!(
        out,
        "# alpha={} alpha_i={:?} beta1={} beta2={}",
        config.alpha, config.alpha_i, config.beta1, config.beta2
    );
    let _ = writeln!(out, "# quad_order={}", config.quad_order);
    out
}

fn cmd_solve(config: &RunConfig) -> Result<(), Error> {
    let problem = config.build_problem()?;
    let grid = Grid::new(config.n_steps, problem.horizon)?;
    let rules = KernelRules::build(&problem.orders, config.quad_order)?;

    if config.paths == 1 {
        let path = sample_path(config.seed, 0, &grid, problem.wiener_dim)?;
        let traj = em_solve(&problem, &grid, &path, &rules)?;
        let mut csv = metadata_header(config);
        let _ = writeln!(csv, "# n_steps={}", config.n_steps);
        let cols: Vec<String> = (1..=problem.dim).map(|i| format!("Z_{i}")).collect();
        let _ = writeln!(csv, "t,{}", cols.join(","));
        for n in 0..=grid.n_steps {
            let row: Vec<String> = traj.state(n).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(csv, "{},{}", grid.node(n), row.join(","));
        }
        std::fs::write(config.output_dir.join("trajectory.csv"), csv)?;
    } else {
        let summary = em_solve_batch(&problem, &grid, config.seed, config.paths, &rules)?;
        let mut csv = metadata_header(config);
        let _ = writeln!(csv, "# n_steps={} paths={}", config.n_steps, config.paths);
        let cols: Vec<String> = (1..=problem.dim).map(|i| format!("mean_Z_{i}")).collect();
        let _ = writeln!(csv, "{},second_moment", cols.join(","));
        let row: Vec<String> = summary.mean.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(csv, "{},{}", row.join(","), summary.second_moment);
        std::fs::write(config.output_dir.join("moments.csv"), csv)?;
    }
    Ok(())
}

fn cmd_converge(config: &RunConfig) -> Result<(), Error> {
    let problem = config.build_problem()?;
    let params = StudyParams {
        levels: config.levels.clone(),
        n_paths: config.paths,
        master_seed: config.seed,
        quad_order: config.quad_order,
    };
    let study = run_study(&problem, &params)?;
    let mut extra = String::new();
    let _ = writeln!(extra, "problem={}", config.problem.as_str());
    let _ = writeln!(
        extra,
        "alpha={} alpha_i={:?} beta1={} beta2={}",
        config.alpha, config.alpha_i, config.beta1, config.beta2
    );
    study.write_artifacts(
        &config.output_dir,
        problem.horizon,
        GENERATOR_NAME,
        config.alpha,
        &extra,
    )?;
    println!(
        "fitted slope {:.4} (reference alpha = {}), residual {:.3e}",
        study.fit.slope, config.alpha, study.fit.residual
    );
    Ok(())
}

fn cmd_gronwall(config: &RunConfig) -> Result<(), Error> {
    let problem = GronwallProblem {
        alpha: config.alpha,
        alpha_i: config.alpha_i.clone(),
        a: if config.a_i.is_empty() {
            config.alpha_i.iter().map(|_| Coefficient::Constant(0.0)).collect()
        } else {
            config.a_i.iter().map(|&a| Coefficient::Constant(a)).collect()
        },
        b: Coefficient::Constant(config.b),
        g: Inhomogeneity::Constant(config.g),
        horizon: config.horizon,
    };
    let policy = SeriesPolicy {
        k_max: config.k_max,
        tail_tol: config.tail_tol,
        quad_order: config.quad_order,
    };
    let mut csv = metadata_header(config);
    let _ = writeln!(csv, "# g={} b={} a_i={:?} k_max={}", config.g, config.b, config.a_i, config.k_max);
    let _ = writeln!(csv, "t,bound,shells_used,tail_estimate");
    for &t in &config.times {
        let bound = gronwall_bound(&problem, t, &policy).map_err(|e| match e {
            Error::NotConverged { .. } => Error::not_converged("gronwall", "series not converged"),
            other => other,
        })?;
        let _ = writeln!(csv, "{t},{},{},{}", bound.value, bound.shells_used, bound.tail_estimate);
    }
    std::fs::write(config.output_dir.join("gronwall.csv"), csv)?;
    Ok(())
}

fn cmd_quadrature(config: &RunConfig) -> Result<(), Error> {
    let (ea, eb) = (config.alpha - 1.0, -config.beta1);
    let rule = build_jacobi_rule(ea, eb, config.quad_order)?;
    let mut csv = metadata_header(config);
    let _ = writeln!(csv, "# exponent_a={ea} exponent_b={eb}");
    let _ = writeln!(csv, "index,node,weight");
    for (i, (n, w)) in rule.nodes.iter().zip(rule.weights.iter()).enumerate() {
        let _ = writeln!(csv, "{i},{n},{w}");
    }
    std::fs::write(config.output_dir.join("quadrature.csv"), csv)?;

    println!("moment validation for (1-u)^{ea} u^{eb}, n = {}", rule.len());
    println!("{:>4} {:>24} {:>24} {:>12}", "k", "quadrature", "analytic", "rel_err");
    for k in 0..rule.len().min(16) {
        let got = integrate(&rule, |u| u.powi(k as i32))?;
        let want = beta(k as f64 + 1.0 + eb, ea + 1.0)?;
        let rel = ((got - want) / want).abs();
        println!("{k:>4} {got:>24.16e} {want:>24.16e} {rel:>12.3e}");
    }
    Ok(())
}
