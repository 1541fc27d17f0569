//! The `prootkit` command line. Every flag can also be set through a
//! `PROOTKIT_*` environment variable.
//!
//! Exit codes: 0 success, 1 bad flags, 2 no convergence, 3 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::bench::{bench, solve, write_summary_csv};
use crate::costmodel::{cost_curve, write_cost_csv};
use crate::error::Error;
use crate::iterations::{MethodTag, StoppingRule};
use crate::linalg::Matrix;
use crate::mmio::{save_matrix_market, Layout};
use crate::polyplan::build_plan;
use crate::report::StopReason;
use crate::source::MatrixSource;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "prootkit", version, about = "Principal matrix p-th roots by Newton-type iterations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute X ~ A^(1/p) with one method.
    Root(RootArgs),
    /// Run several methods on the same matrix and compare time and cost.
    Bench(BenchArgs),
    /// Print the factored form of P_d and its multiplication count.
    Decompose(DecomposeArgs),
    /// Per-iteration cost coefficients over a range of p, as CSV.
    Cost(CostArgs),
}

#[derive(Debug, Args)]
struct IterFlags {
    /// identity:N, diag:d1,d2,..., random-spd:N,COND,SEED, or a MatrixMarket path
    #[arg(long, env = "PROOTKIT_INPUT")]
    input: String,

    #[arg(long, env = "PROOTKIT_P")]
    p: usize,

    /// Relative residual at which to stop
    #[arg(long, env = "PROOTKIT_TOL", default_value_t = 1e-13)]
    tol: f64,

    /// Relative increment at which to stop
    #[arg(long, env = "PROOTKIT_H_TOL", default_value_t = 1e-14)]
    h_tol: f64,

    #[arg(long, env = "PROOTKIT_MAX_ITER", default_value_t = 100)]
    max_iter: usize,

    /// Run on A^(1/2)/||A^(1/2)||_F instead of A
    #[arg(long, env = "PROOTKIT_PRECONDITION", default_value_t = true, action = ArgAction::Set)]
    precondition: bool,
}

impl IterFlags {
    fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            tol: self.tol,
            h_tol: self.h_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Args)]
struct RootArgs {
    #[command(flatten)]
    iter: IterFlags,

    #[arg(long, env = "PROOTKIT_METHOD", default_value = "variant")]
    method: String,

    /// Where to write the computed root (MatrixMarket array format)
    #[arg(long, env = "PROOTKIT_OUT")]
    out: Option<PathBuf>,

    /// Where to write the per-iteration report (CSV)
    #[arg(long, env = "PROOTKIT_REPORT")]
    report: Option<PathBuf>,

    /// Also recover the root of the original A
    #[arg(long, env = "PROOTKIT_RECOVER")]
    recover: bool,

    /// Output path for the recovered root; defaults to <out>.recovered.mtx
    #[arg(long, env = "PROOTKIT_RECOVER_OUT")]
    recover_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    iter: IterFlags,

    #[arg(long, env = "PROOTKIT_METHODS", default_value = "in,variant,iter39")]
    methods: String,

    #[arg(long, env = "PROOTKIT_REPEATS", default_value_t = 3)]
    repeats: usize,

    #[arg(long, env = "PROOTKIT_REPORT_DIR", default_value = ".")]
    report_dir: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct DecomposeArgs {
    /// Degree of P_d
    #[arg(long, env = "PROOTKIT_D")]
    d: Option<usize>,

    /// Root order; decomposes P_(p-2)
    #[arg(long, env = "PROOTKIT_P")]
    p: Option<usize>,
}

#[derive(Debug, Args)]
struct CostArgs {
    #[arg(long, env = "PROOTKIT_P_MIN", default_value_t = 5)]
    p_min: usize,

    #[arg(long, env = "PROOTKIT_P_MAX", default_value_t = 100)]
    p_max: usize,

    /// Write the CSV here instead of stdout
    #[arg(long, env = "PROOTKIT_OUT")]
    out: Option<PathBuf>,
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => EXIT_IO,
            Error::InvalidArgument(_) | Error::PlanDegree { .. } => EXIT_USAGE,
            _ => EXIT_NO_CONVERGENCE,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        msg: format!("{}: {e}", path.display()),
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Root(a) => cmd_root(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Decompose(a) => cmd_decompose(a, out),
        Command::Cost(a) => cmd_cost(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

fn load_input(input: &str) -> Result<(MatrixSource, Matrix), Failure> {
    let source: MatrixSource = input.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    let a = source.load()?;
    if !a.is_square() {
        return Err(Failure::usage(format!(
            "input must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok((source, a))
}

fn check_p(p: usize) -> Result<(), Failure> {
    if p < 2 {
        return Err(Failure::usage(format!("--p must be at least 2, got {p}")));
    }
    Ok(())
}

fn cmd_root(args: RootArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let method: MethodTag = args.method.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    check_p(args.iter.p)?;
    let (source, a) = load_input(&args.iter.input)?;
    let stop = args.iter.stopping_rule();
    let p = args.iter.p;

    let outcome = solve(&a, p, method, args.iter.precondition, &stop);
    let report = match &outcome {
        Ok(sol) => Some(sol.report.clone()),
        Err(e) => e.report().cloned(),
    };
    if let (Some(path), Some(mut rep)) = (&args.report, report) {
        rep.label = source.to_string();
        rep.save(path).map_err(|e| io_failure(path, e))?;
    }
    let sol = outcome?;

    if let Some(path) = &args.out {
        save_matrix_market(path, &sol.root, Layout::Array).map_err(|e| io_failure(path, e))?;
    }
    let _ = writeln!(
        out,
        "method={method} p={p} n={} iterations={} residual={:.3e} stop={}",
        a.rows(),
        sol.report.iterations(),
        sol.report.final_residual(),
        sol.report.stop.map_or("none".into(), |s| s.to_string()),
    );
    if args.recover && sol.problem.is_some() {
        let recovered = sol.recovered();
        let _ = writeln!(out, "recovered residual={:.3e}", sol.recovered_residual());
        let target = args.recover_out.clone().or_else(|| {
            args.out.as_ref().map(|o| o.with_extension("recovered.mtx"))
        });
        if let Some(path) = target {
            save_matrix_market(&path, &recovered, Layout::Array).map_err(|e| io_failure(&path, e))?;
        }
    }
    Ok(exit_for(&sol.report.stop, sol.report.final_residual(), stop.tol, out))
}

/// Success requires the final residual to meet the tolerance; a run that
/// stalled on the increment test above it counts as not converged.
fn exit_for(stop: &Option<StopReason>, residual: f64, tol: f64, out: &mut dyn Write) -> i32 {
    match stop {
        Some(StopReason::Residual) => EXIT_OK,
        Some(StopReason::Increment) if residual <= tol => EXIT_OK,
        _ => {
            let _ = writeln!(out, "residual {residual:.3e} did not reach tolerance {tol:.1e}");
            EXIT_NO_CONVERGENCE
        }
    }
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    check_p(args.iter.p)?;
    let methods = args
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<MethodTag>, Error>>()
        .map_err(|e| Failure::usage(e.to_string()))?;
    if methods.is_empty() || args.repeats == 0 {
        return Err(Failure::usage("need at least one method and --repeats >= 1"));
    }
    let (source, a) = load_input(&args.iter.input)?;
    let stop = args.iter.stopping_rule();
    let label = source.to_string();
    let result = bench(&a, &label, args.iter.p, &methods, args.repeats, args.iter.precondition, &stop);

    fs::create_dir_all(&args.report_dir).map_err(|e| io_failure(&args.report_dir, e))?;
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            if let Some(rep) = e.report() {
                let path = args.report_dir.join(format!("{}.csv", rep.method));
                rep.save(&path).map_err(|e| io_failure(&path, e))?;
            }
            return Err(e.into());
        }
    };
    for rep in &outcome.reports {
        let path = args.report_dir.join(format!("{}.csv", rep.method));
        rep.save(&path).map_err(|e| io_failure(&path, e))?;
    }
    let summary = args.report_dir.join("summary.csv");
    let file = fs::File::create(&summary).map_err(|e| io_failure(&summary, e))?;
    write_summary_csv(file, &outcome.rows).map_err(|e| io_failure(&summary, e))?;

    let _ = writeln!(
        out,
        "{:<8} {:>5} {:>12} {:>8} {:>12} {:>14} {:>10}",
        "method", "iters", "wall_ms", "t/t_in", "residual", "coeff/iter", "flops/in"
    );
    let mut code = EXIT_OK;
    for r in &outcome.rows {
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>12.3} {:>8} {:>12.3e} {:>14} {:>10}",
            r.method.to_string(),
            r.iterations,
            r.total_wall_ms,
            r.time_ratio_vs_in.map_or("-".into(), |v| format!("{v:.3}")),
            r.final_residual,
            r.per_iter_coeff.to_string(),
            r.flop_ratio_vs_in.map_or("-".into(), |v| v.to_string()),
        );
        if r.final_residual > stop.tol {
            code = EXIT_NO_CONVERGENCE;
        }
    }
    Ok(code)
}

fn cmd_decompose(args: DecomposeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let d = match (args.d, args.p) {
        (Some(d), _) => d,
        (None, Some(p)) => {
            check_p(p)?;
            p - 2
        }
        (None, None) => return Err(Failure::usage("need --d or --p")),
    };
    let plan = build_plan(d);
    let _ = writeln!(out, "{plan}");
    let _ = writeln!(out, "{} multiplications", plan.matmul_cost());
    if let Some(p) = args.p {
        let _ = writeln!(out, "{} multiplications per iteration for p = {p}", plan.matmul_cost() + 2);
    }
    Ok(EXIT_OK)
}

fn cmd_cost(args: CostArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    if args.p_min < 5 || args.p_min > args.p_max {
        return Err(Failure::usage("need 5 <= --p-min <= --p-max"));
    }
    let rows = cost_curve(args.p_min, args.p_max);
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
            write_cost_csv(file, &rows).map_err(|e| io_failure(path, e))?;
        }
        None => write_cost_csv(&mut *out, &rows)?,
    }
    Ok(EXIT_OK)
}
