//! End-to-end experiments: precondition, iterate, compare methods.

use std::io::{Read, Write};

use num_rational::Rational64;

use crate::costmodel::ratio_f64;
use crate::error::{Error, Result};
use crate::iterations::{relative_residual, run, MethodTag, StoppingRule};
use crate::linalg::{Matrix, OpCounter};
use crate::precondition::{precondition, recover_root, PreconditionedProblem};
use crate::report::{ConvergenceReport, StopReason};

/// Result of solving `X^p = A` for one method.
#[derive(Clone, Debug)]
pub struct Solution {
    /// `None` when the iteration ran on `A` directly.
    pub problem: Option<PreconditionedProblem>,
    /// Root of the matrix the iteration actually ran on (`A~` or `A`).
    pub root: Matrix,
    pub report: ConvergenceReport,
    /// Counter of the iteration alone (preconditioning excluded).
    pub counter: OpCounter,
}

impl Solution {
    /// Root of the original `A`.
    pub fn recovered(&self) -> Matrix {
        match &self.problem {
            Some(prob) => recover_root(prob, &self.root),
            None => self.root.clone(),
        }
    }

    /// `||X^p - A||_F / ||A||_F` for the recovered root.
    pub fn recovered_residual(&self) -> f64 {
        let a = match &self.problem {
            Some(prob) => &prob.original,
            None => return self.report.final_residual(),
        };
        relative_residual(&self.recovered(), a, self.report.p)
    }
}

pub fn prepare(a: &Matrix, p: usize, precondition_input: bool) -> Result<Option<PreconditionedProblem>> {
    if precondition_input {
        Ok(Some(precondition(a, p, &mut OpCounter::new())?))
    } else {
        Ok(None)
    }
}

/// Solves on an already prepared problem. A failed run still carries its
/// report inside the error.
pub fn solve_prepared(
    a: &Matrix,
    problem: Option<&PreconditionedProblem>,
    p: usize,
    method: MethodTag,
    stop: &StoppingRule,
) -> Result<Solution> {
    let target = problem.map_or(a, |prob| &prob.a_tilde);
    let mut counter = OpCounter::new();
    let (root, report) = run(target, p, method, stop, &mut counter)?;
    Ok(Solution {
        problem: problem.cloned(),
        root,
        report,
        counter,
    })
}

pub fn solve(
    a: &Matrix,
    p: usize,
    method: MethodTag,
    precondition_input: bool,
    stop: &StoppingRule,
) -> Result<Solution> {
    let problem = prepare(a, p, precondition_input)?;
    solve_prepared(a, problem.as_ref(), p, method, stop)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: MethodTag,
    pub iterations: usize,
    /// Fastest of the repeats.
    pub total_wall_ms: f64,
    pub time_ratio_vs_in: Option<f64>,
    pub final_residual: f64,
    pub stop: StopReason,
    pub matmuls: u64,
    pub lus: u64,
    pub counted_flops: f64,
    /// Counted `n^3` coefficient per iteration.
    pub per_iter_coeff: Rational64,
    pub flop_ratio_vs_in: Option<Rational64>,
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    /// Report of the fastest repeat, per method, in `rows` order.
    pub reports: Vec<ConvergenceReport>,
}

/// Runs every method `repeats` times on the same preconditioned matrix.
pub fn bench(
    a: &Matrix,
    label: &str,
    p: usize,
    methods: &[MethodTag],
    repeats: usize,
    precondition_input: bool,
    stop: &StoppingRule,
) -> Result<BenchOutcome> {
    if methods.is_empty() || repeats == 0 {
        return Err(Error::InvalidArgument("need at least one method and one repeat".into()));
    }
    let problem = prepare(a, p, precondition_input)?;
    // Repeats are interleaved across methods so clock drift hits all alike.
    let mut best: Vec<Option<Solution>> = vec![None; methods.len()];
    for _ in 0..repeats {
        for (slot, &method) in best.iter_mut().zip(methods) {
            let mut sol = solve_prepared(a, problem.as_ref(), p, method, stop)?;
            sol.report.label = label.to_string();
            let faster = slot
                .as_ref()
                .is_none_or(|b| sol.report.total_wall_ms() < b.report.total_wall_ms());
            if faster {
                *slot = Some(sol);
            }
        }
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (sol, &method) in best.into_iter().zip(methods) {
        let sol = sol.expect("repeats >= 1");
        let iters = sol.report.iterations();
        let per_iter_coeff = if iters == 0 {
            Rational64::from_integer(0)
        } else {
            sol.counter.cubic_coeff() / Rational64::from_integer(iters as i64)
        };
        rows.push(BenchRow {
            method,
            iterations: iters,
            total_wall_ms: sol.report.total_wall_ms(),
            time_ratio_vs_in: None,
            final_residual: sol.report.final_residual(),
            stop: sol.report.stop.unwrap_or(StopReason::Residual),
            matmuls: sol.counter.matmul_count(),
            lus: sol.counter.lu_count(),
            counted_flops: sol.counter.flop_estimate_f64(),
            per_iter_coeff,
            flop_ratio_vs_in: None,
        });
        reports.push(sol.report);
    }
    if let Some(base) = rows.iter().find(|r| r.method == MethodTag::In).cloned() {
        for r in &mut rows {
            if base.total_wall_ms > 0.0 {
                r.time_ratio_vs_in = Some(r.total_wall_ms / base.total_wall_ms);
            }
            if base.per_iter_coeff != Rational64::from_integer(0) {
                r.flop_ratio_vs_in = Some(r.per_iter_coeff / base.per_iter_coeff);
            }
        }
    }
    Ok(BenchOutcome { rows, reports })
}

const SUMMARY_HEADER: [&str; 12] = [
    "method",
    "iterations",
    "total_wall_ms",
    "time_ratio_vs_in",
    "final_residual",
    "stop",
    "matmuls",
    "lus",
    "counted_flops",
    "per_iter_coeff",
    "flop_ratio_vs_in",
    "flop_ratio_vs_in_value",
];

pub fn write_summary_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.iterations.to_string(),
            format!("{:.3}", r.total_wall_ms),
            opt(r.time_ratio_vs_in.map(|v| format!("{v:.4}"))),
            format!("{:.6e}", r.final_residual),
            r.stop.to_string(),
            r.matmuls.to_string(),
            r.lus.to_string(),
            format!("{:.6e}", r.counted_flops),
            r.per_iter_coeff.to_string(),
            opt(r.flop_ratio_vs_in.map(|v| v.to_string())),
            opt(r.flop_ratio_vs_in.map(|v| format!("{:.6}", ratio_f64(v)))),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let bad = |what: &str| Error::InvalidArgument(format!("summary csv: bad {what}"));
    let mut rows = Vec::new();
    for rec in csv::Reader::from_reader(input).records() {
        let rec = rec?;
        let s = |i: usize| rec.get(i).unwrap_or("");
        let opt_f = |i: usize| -> Result<Option<f64>> {
            match s(i) {
                "" => Ok(None),
                t => t.parse().map(Some).map_err(|_| bad(SUMMARY_HEADER[i])),
            }
        };
        let req = |i: usize| -> Result<&str> {
            match s(i) {
                "" => Err(bad(SUMMARY_HEADER[i])),
                t => Ok(t),
            }
        };
        rows.push(BenchRow {
            method: req(0)?.parse()?,
            iterations: req(1)?.parse().map_err(|_| bad("iterations"))?,
            total_wall_ms: req(2)?.parse().map_err(|_| bad("total_wall_ms"))?,
            time_ratio_vs_in: opt_f(3)?,
            final_residual: req(4)?.parse().map_err(|_| bad("final_residual"))?,
            stop: req(5)?.parse()?,
            matmuls: req(6)?.parse().map_err(|_| bad("matmuls"))?,
            lus: req(7)?.parse().map_err(|_| bad("lus"))?,
            counted_flops: req(8)?.parse().map_err(|_| bad("counted_flops"))?,
            per_iter_coeff: req(9)?.parse().map_err(|_| bad("per_iter_coeff"))?,
            flop_ratio_vs_in: match s(10) {
                "" => None,
                t => Some(t.parse().map_err(|_| bad("flop_ratio_vs_in"))?),
            },
        });
    }
    Ok(rows)
}
