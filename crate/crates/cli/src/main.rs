use anyhow::{bail, Context, Result};
use bura::experiments::{run_figures, run_table1, run_table2, ExperimentConfig, RhsSpec};
use bura::matrix::{laplacian_1d, normalize, read_matrix_market, NormalizationBound, NormalizedMatrix};
use bura::rational::{
    bura_compute, check_positivity_conditions, partial_fractions, stahl_bound, verify_equioscillation,
    zeros_poles_interlace, BuraParams, CoefficientFile, PartialFractionForm, RemezOptions,
};
use bura::solver::{apply_bura_inverse, verify_doubly_nonnegative_with, write_solution_csv, LinearSolver, SolverConfig, DNN_CAP};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Positive rational approximations of fractional matrix powers.
#[derive(Parser, Debug)]
#[command(name = "bura", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute an approximant and print its partial-fraction coefficients as JSON.
    Approx {
        #[command(flatten)]
        approx: ApproxArgs,
        /// Also write the coefficients to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve A^alpha u = f with an approximant.
    Solve {
        #[command(flatten)]
        approx: ApproxArgs,
        #[command(flatten)]
        system: SystemArgs,
        /// Right-hand side: f1, f2, unit:<i> or file:<path>.
        #[arg(long, default_value = "f2")]
        rhs: String,
        #[arg(long, value_enum)]
        solver: Option<SolverArg>,
        /// Directory for solution.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the positivity certificate, equioscillation and, with a matrix,
    /// entrywise nonnegativity of the approximate inverse.
    Certify {
        #[command(flatten)]
        approx: ApproxArgs,
        #[command(flatten)]
        system: SystemArgs,
    },
    /// Minimax error table.
    Table1(ExperimentArgs),
    /// Discretization-plus-approximation error table.
    Table2(ExperimentArgs),
    /// Figure data.
    Figures(ExperimentArgs),
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    beta: u32,
    /// Numerator degree (defaults to k).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Working precision of the Remez iteration.
    #[arg(long)]
    precision_bits: Option<u32>,
    /// Read precomputed coefficients instead of running Remez.
    #[arg(long, conflicts_with_all = ["m", "precision_bits"])]
    coeffs: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// `laplacian1d` or `mtx:<path>`.
    #[arg(long, default_value = "laplacian1d")]
    matrix: String,
    /// Size of the 1D Laplacian.
    #[arg(long, conflicts_with = "mesh_exp")]
    n: Option<usize>,
    /// 1D Laplacian with N = 2^m - 1.
    #[arg(long)]
    mesh_exp: Option<u32>,
    /// Normalize by the exact largest eigenvalue instead of a Gershgorin bound.
    #[arg(long)]
    exact_scale: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    rhs: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Thomas,
    Cg,
}

/// Exit status for a completed run whose certificate failed.
const EXIT_UNCERTIFIED: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_UNCERTIFIED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the run completed but a certificate failed.
fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Approx { approx, out } => {
            let pf = approximant(&approx)?;
            let file = pf.to_coefficient_file();
            if let Some(p) = out {
                file.write(&p).with_context(|| format!("writing {}", p.display()))?;
            }
            println!("{}", file.to_json()?);
            Ok(true)
        }
        Command::Solve { approx, system, rhs, solver, out } => {
            let pf = approximant(&approx)?;
            let a = load_matrix(&system)?;
            let f = RhsSpec::parse(&rhs)?.sample(a.n())?;
            let mut cfg = SolverConfig::for_matrix(&a);
            match solver {
                Some(SolverArg::Thomas) => cfg.linear_solver = LinearSolver::ThomasDirect,
                Some(SolverArg::Cg) => cfg.linear_solver = LinearSolver::ConjugateGradient,
                None => {}
            }
            let report = apply_bura_inverse(&pf, &a, &f, &cfg)?;
            // back to the unnormalized matrix: A_orig^-alpha = scale^-alpha A^-alpha
            let s = a.scale.powf(-pf.params.alpha);
            let u: Vec<f64> = report.u_r.iter().map(|v| v * s).collect();
            let summary = json!({
                "n": a.n(),
                "scale": a.scale,
                "terms": report.terms_evaluated,
                "linear_solver": report.linear_solver,
                "wall_time": report.wall_time,
                "max_term_residual": report.per_term_residuals.iter().cloned().fold(0.0f64, f64::max),
                "min": u.iter().cloned().fold(f64::INFINITY, f64::min),
                "max": u.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            });
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let h = a.laplacian_size().map(|n| 1.0 / (n + 1) as f64);
                write_solution_csv(&dir.join("solution.csv"), &u, h)?;
                std::fs::write(dir.join("report.json"), report.to_json()?)?;
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(true)
        }
        Command::Certify { approx, system } => {
            let pf = approximant(&approx)?;
            let cert = check_positivity_conditions(&pf, &pf.params);
            let interlace = zeros_poles_interlace(&pf);
            let mut ok = cert.certified;
            let mut out = json!({
                "params": pf.params,
                "E": pf.minimax_error,
                "certificate": cert,
                "zeros_poles_interlace": interlace,
            });
            if pf.params.beta == 1 && pf.params.m == pf.params.k {
                out["stahl_bound"] = json!(stahl_bound(pf.params.alpha, pf.params.k));
            }
            if approx.coeffs.is_none() {
                let r = bura_compute(&pf.params, &remez_options(&approx))?;
                let ext = verify_equioscillation(&r)?;
                out["equioscillation"] = json!({ "count": ext.points.len(), "spread": ext.spread, "ok": ext.alternation_ok });
            }
            if system.n.is_some() || system.mesh_exp.is_some() || system.matrix != "laplacian1d" {
                let a = load_matrix(&system)?;
                let cfg = SolverConfig::for_matrix(&a);
                let dnn = verify_doubly_nonnegative_with(&pf, &a, DNN_CAP, &cfg)?;
                ok &= dnn.nonnegative && dnn.symmetric;
                out["doubly_nonnegative"] = json!(dnn);
            }
            out["certified"] = json!(ok);
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(ok)
        }
        Command::Table1(args) => {
            let cfg = experiment_config(&args)?;
            let rows = run_table1(&cfg)?;
            println!("{:>6} {:>3} {:>12} {:>12} {:>9}", "alpha", "k", "E", "bound", "certified");
            for r in &rows {
                println!("{:>6} {:>3} {:>12.4e} {:>12.4e} {:>9}", r.alpha, r.k, r.error, r.stahl_bound, r.certified);
            }
            Ok(rows.iter().all(|r| r.certified))
        }
        Command::Table2(args) => {
            let cfg = experiment_config(&args)?;
            let cells = run_table2(&cfg)?;
            println!("{:>3} {:>6} {:>3} {:>12} {:>12}", "m", "alpha", "k", "rel_l2", "bound");
            for c in &cells {
                println!("{:>3} {:>6} {:>3} {:>12.4e} {:>12.4e}", c.mesh_exponent, c.alpha, c.k, c.rel_l2_error, c.mesh_error_bound);
            }
            Ok(true)
        }
        Command::Figures(args) => {
            let cfg = experiment_config(&args)?;
            let figs = run_figures(&cfg)?;
            for s in &figs.slopes {
                let k = s.k.map_or("all".to_string(), |k| k.to_string());
                println!("alpha {} k {k}: slope {:.3} (expected {:.3})", s.alpha, s.slope, s.expected);
            }
            println!("wrote figure data to {}", cfg.outputs.display());
            Ok(true)
        }
    }
}

fn remez_options(a: &ApproxArgs) -> RemezOptions {
    a.precision_bits.map_or_else(RemezOptions::default, RemezOptions::with_precision)
}

fn approximant(a: &ApproxArgs) -> Result<PartialFractionForm> {
    if let Some(p) = &a.coeffs {
        let pf = CoefficientFile::read(p).with_context(|| format!("reading {}", p.display()))?.into_form()?;
        if pf.params.alpha != a.alpha || pf.params.beta != a.beta || pf.params.k != a.k {
            log::warn!("parameters taken from {} override the command line", p.display());
        }
        return Ok(pf);
    }
    let params = BuraParams::new(a.alpha, a.beta, a.m.unwrap_or(a.k), a.k)?;
    let r = bura_compute(&params, &remez_options(a))?;
    Ok(partial_fractions(&r)?)
}

fn load_matrix(s: &SystemArgs) -> Result<NormalizedMatrix> {
    let bound = if s.exact_scale { NormalizationBound::Exact } else { NormalizationBound::Gershgorin };
    if s.matrix == "laplacian1d" {
        let n = match (s.n, s.mesh_exp) {
            (Some(n), _) => n,
            (None, Some(m)) => {
                if m == 0 || m > 30 {
                    bail!("mesh exponent {m} out of range 1..=30");
                }
                (1usize << m) - 1
            }
            (None, None) => bail!("the 1D Laplacian needs --n or --mesh-exp"),
        };
        return Ok(laplacian_1d(n)?);
    }
    let Some(path) = s.matrix.strip_prefix("mtx:") else {
        bail!("unknown matrix {:?}; expected laplacian1d or mtx:<path>", s.matrix);
    };
    let a = read_matrix_market(Path::new(path)).with_context(|| format!("reading {path}"))?;
    Ok(normalize(&a, bound)?)
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::read(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &args.out {
        cfg.outputs = o.clone();
    }
    if let Some(b) = args.precision_bits {
        cfg.precision_bits = Some(b);
    }
    if let Some(r) = &args.rhs {
        cfg.rhs = RhsSpec::parse(r)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
