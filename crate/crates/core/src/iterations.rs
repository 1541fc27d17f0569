//! Newton-type iterations for the principal `p`-th root, all started from
//! `X_0 = I`.
//!
//! | tag       | update                                                             |
//! |-----------|--------------------------------------------------------------------|
//! | `plain`   | `X+ = ((p-1) X + A X^(1-p)) / p`                                   |
//! | `in`      | `X+ = X + H`, `H+ = -(1/p) H (sum_{i<=p-2} (i+1) X+^-1 F^i) H`      |
//! | `iter39`  | `X+ = X + H`, `H+ = -X ((I - F^p)/p + F^(p-1) (F - I))`             |
//! | `coupled` | `M = ((p-1) I + N)/p`, `X+ = X M`, `N+ = M^-p N`                    |
//! | `variant` | `X+ = X + H`, `H+ = -(1/p) {[-(p-1) F + p I] P_(p-2)(F) - (p-1) I} H` |
//!
//! with `F = X X+^{-1}` and `H_0 = (A - I)/p`. In exact arithmetic all five
//! produce the same sequence `X_k`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{
    axpy_affine, linear_combination, lu_solve_right, matmul, power, Matrix, OpCounter,
};
use crate::polyplan::{build_plan, eval_plan, EvalPlan};
use crate::report::{ConvergenceReport, IterRecord, StopReason};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodTag {
    Plain,
    In,
    Iter39,
    Coupled,
    Variant,
}

impl MethodTag {
    pub const ALL: [MethodTag; 5] = [
        MethodTag::Plain,
        MethodTag::In,
        MethodTag::Iter39,
        MethodTag::Coupled,
        MethodTag::Variant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Plain => "plain",
            MethodTag::In => "in",
            MethodTag::Iter39 => "iter39",
            MethodTag::Coupled => "coupled",
            MethodTag::Variant => "variant",
        }
    }

    /// Methods that carry an explicit increment `H_k` in `aux`.
    pub fn is_incremental(self) -> bool {
        matches!(self, MethodTag::In | MethodTag::Iter39 | MethodTag::Variant)
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        MethodTag::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method `{s}` (expected plain, in, iter39, coupled or variant)"
                ))
            })
    }
}

/// `(X_k, aux_k)` after `k` steps. `aux` is `H_k` for the incremental
/// methods, `N_k ~ X_k^-p A` for `coupled`, and zero for `plain`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub x: Matrix,
    pub aux: Matrix,
    pub method: MethodTag,
}

impl IterationState {
    pub fn initial(a: &Matrix, p: usize, method: MethodTag) -> Result<Self> {
        let n = a.require_square("initial state")?;
        check_p(p)?;
        let id = Matrix::identity(n);
        let aux = match method {
            MethodTag::Plain => Matrix::zeros(n, n),
            MethodTag::Coupled => a.clone(),
            _ => axpy_affine(1.0 / p as f64, a, 0.0, a, -1.0 / p as f64)?,
        };
        Ok(IterationState {
            k: 0,
            x: id,
            aux,
            method,
        })
    }

    fn next(&self, x: Matrix, aux: Matrix) -> IterationState {
        IterationState {
            k: self.k + 1,
            x,
            aux,
            method: self.method,
        }
    }
}

fn check_p(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("root order p must be >= 2, got {p}")));
    }
    Ok(())
}

/// `X+ = X + H` and `F = X X+^{-1}`.
fn advance(state: &IterationState, counter: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let x_next = axpy_affine(1.0, &state.x, 1.0, &state.aux, 0.0)?;
    let f = lu_solve_right(&state.x, &x_next, counter)?;
    Ok((x_next, f))
}

pub fn step_plain(
    a: &Matrix,
    p: usize,
    state: &IterationState,
    counter: &mut OpCounter,
) -> Result<IterationState> {
    let n = state.x.rows();
    let x_inv = lu_solve_right(&Matrix::identity(n), &state.x, counter)?;
    let x_pow = power(&x_inv, (p - 1) as u64, counter)?;
    let ax = matmul(a, &x_pow, counter)?;
    let pf = p as f64;
    let x_next = axpy_affine((pf - 1.0) / pf, &state.x, 1.0 / pf, &ax, 0.0)?;
    Ok(state.next(x_next, Matrix::zeros(n, n)))
}

/// Incremental Newton with the increment summed literally.
///
/// The sum `sum (i+1) F^i` is evaluated by Horner (`p - 3` products), and
/// `H X+^{-1}` by a second right division, giving `p - 1` products and two
/// divisions per step: `(2p + 10/3) n^3` flops.
pub fn step_in(p: usize, state: &IterationState, counter: &mut OpCounter) -> Result<IterationState> {
    let n = state.x.rows();
    let h = &state.aux;
    let (x_next, f) = advance(state, counter)?;
    let g = lu_solve_right(h, &x_next, counter)?;
    let deg = p - 2;
    let gs = if deg == 0 {
        g
    } else {
        // sum_{i=0}^{deg} (i+1) F^i
        let mut s = axpy_affine((deg + 1) as f64, &f, 0.0, &f, deg as f64)?;
        for i in (0..deg - 1).rev() {
            let sf = matmul(&s, &f, counter)?;
            s = linear_combination(&[(1.0, &sf)], (i + 1) as f64, n)?;
        }
        matmul(&g, &s, counter)?
    };
    let h_next = matmul(&gs, h, counter)?.scaled(-1.0 / p as f64);
    Ok(state.next(x_next, h_next))
}

/// Increment update built from `F^(p-1)` and `F^p`, which share one squaring
/// chain; `F^(p-1)(F - I)` is formed as `F^p - F^(p-1)`.
pub fn step_iter39(
    p: usize,
    state: &IterationState,
    counter: &mut OpCounter,
) -> Result<IterationState> {
    let n = state.x.rows();
    let (x_next, f) = advance(state, counter)?;
    let f_pm1 = power(&f, (p - 1) as u64, counter)?;
    let f_p = matmul(&f_pm1, &f, counter)?;
    let pf = p as f64;
    let bracket = linear_combination(&[(1.0 - 1.0 / pf, &f_p), (-1.0, &f_pm1)], 1.0 / pf, n)?;
    // Multiplies by X_{k+1}; with X_k the step no longer reduces to Newton's.
    let h_next = matmul(&x_next, &bracket, counter)?.scaled(-1.0);
    Ok(state.next(x_next, h_next))
}

pub fn step_coupled(
    p: usize,
    state: &IterationState,
    counter: &mut OpCounter,
) -> Result<IterationState> {
    let n = state.x.rows();
    let pf = p as f64;
    let m = axpy_affine(1.0 / pf, &state.aux, 0.0, &state.aux, (pf - 1.0) / pf)?;
    let x_next = matmul(&state.x, &m, counter)?;
    let m_inv = lu_solve_right(&Matrix::identity(n), &m, counter)?;
    let m_inv_p = power(&m_inv, p as u64, counter)?;
    let n_next = matmul(&m_inv_p, &state.aux, counter)?;
    Ok(state.next(x_next, n_next))
}

/// The reduced-cost incremental update: one right division, the products of
/// `plan`, and two more.
pub fn step_variant(
    p: usize,
    state: &IterationState,
    plan: &EvalPlan,
    counter: &mut OpCounter,
) -> Result<IterationState> {
    if plan.degree() + 2 != p {
        return Err(Error::PlanDegree {
            expected: p.saturating_sub(2),
            found: plan.degree(),
        });
    }
    let n = state.x.rows();
    let pf = p as f64;
    let (x_next, f) = advance(state, counter)?;
    let poly = eval_plan(plan, &f, counter)?;
    let left = axpy_affine(-(pf - 1.0), &f, 0.0, &f, pf)?;
    let t = matmul(&left, &poly, counter)?;
    let brace = linear_combination(&[(1.0, &t)], -(pf - 1.0), n)?;
    let h_next = matmul(&brace, &state.aux, counter)?.scaled(-1.0 / pf);
    Ok(state.next(x_next, h_next))
}

/// One problem `X^p = A` bound to one method.
#[derive(Clone, Debug)]
pub struct RootIteration {
    a: Matrix,
    p: usize,
    method: MethodTag,
    plan: Option<EvalPlan>,
}

impl RootIteration {
    pub fn new(a: &Matrix, p: usize, method: MethodTag) -> Result<Self> {
        a.require_square("root iteration")?;
        check_p(p)?;
        let plan = (method == MethodTag::Variant).then(|| build_plan(p - 2));
        Ok(RootIteration {
            a: a.clone(),
            p,
            method,
            plan,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }

    pub fn initial_state(&self) -> IterationState {
        IterationState::initial(&self.a, self.p, self.method).expect("validated in new")
    }

    pub fn step(&self, state: &IterationState, counter: &mut OpCounter) -> Result<IterationState> {
        debug_assert_eq!(state.method, self.method);
        match self.method {
            MethodTag::Plain => step_plain(&self.a, self.p, state, counter),
            MethodTag::In => step_in(self.p, state, counter),
            MethodTag::Iter39 => step_iter39(self.p, state, counter),
            MethodTag::Coupled => step_coupled(self.p, state, counter),
            MethodTag::Variant => {
                step_variant(self.p, state, self.plan.as_ref().expect("variant plan"), counter)
            }
        }
    }

    /// `R(X) = ||X^p - A||_F / ||A||_F`, evaluated off the books.
    pub fn residual(&self, x: &Matrix) -> f64 {
        relative_residual(x, &self.a, self.p)
    }
}

pub fn relative_residual(x: &Matrix, a: &Matrix, p: usize) -> f64 {
    let mut scratch = OpCounter::new();
    let xp = power(x, p as u64, &mut scratch).expect("square iterate");
    xp.frob_dist(a) / a.frob_norm()
}

/// When to stop iterating. The first two conditions are success; hitting
/// `max_iter` is failure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    /// Relative residual threshold.
    pub tol: f64,
    /// Threshold on `||X_k - X_{k-1}||_F / ||X_k||_F`.
    pub h_tol: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            tol: 1e-13,
            h_tol: 1e-14,
            max_iter: 100,
        }
    }
}

/// Iterates from `X_0 = I` until `stop` fires.
///
/// The counter sees only the iteration's own work; residuals are computed
/// separately and are not timed either.
pub fn run(
    a: &Matrix,
    p: usize,
    method: MethodTag,
    stop: &StoppingRule,
    counter: &mut OpCounter,
) -> Result<(Matrix, ConvergenceReport)> {
    let iter = RootIteration::new(a, p, method)?;
    run_iteration(&iter, stop, counter)
}

pub fn run_iteration(
    iter: &RootIteration,
    stop: &StoppingRule,
    counter: &mut OpCounter,
) -> Result<(Matrix, ConvergenceReport)> {
    let mut report = ConvergenceReport::new(iter.method, iter.p, iter.a.rows());
    let mut state = iter.initial_state();
    let record = |report: &mut ConvergenceReport, k, residual, inc, ms, c: &OpCounter| {
        report.rows.push(IterRecord {
            k,
            residual,
            increment_norm: inc,
            wall_ms: ms,
            cum_matmuls: c.matmul_count(),
            cum_lus: c.lu_count(),
            cum_flop_estimate: c.flop_estimate_f64(),
        })
    };
    let r0 = iter.residual(&state.x);
    record(&mut report, 0, r0, f64::NAN, 0.0, counter);
    if r0 <= stop.tol {
        report.stop = Some(StopReason::Residual);
        return Ok((state.x, report));
    }
    loop {
        if state.k >= stop.max_iter {
            report.stop = Some(StopReason::MaxIter);
            return Err(Error::NonConvergence {
                report: Box::new(report),
                hint: "the spectrum of A may lie outside {Re z > 0, |z| <= 1}",
            });
        }
        let started = Instant::now();
        let next = match iter.step(&state, counter) {
            Ok(s) => s,
            Err(e) => {
                report.stop = Some(StopReason::Breakdown);
                return Err(Error::Breakdown {
                    k: state.k,
                    source: Box::new(e),
                    report: Box::new(report),
                });
            }
        };
        let ms = started.elapsed().as_secs_f64() * 1e3;
        let inc = next.x.frob_dist(&state.x) / next.x.frob_norm();
        let r = iter.residual(&next.x);
        record(&mut report, next.k, r, inc, ms, counter);
        state = next;
        if !r.is_finite() || !inc.is_finite() {
            report.stop = Some(StopReason::Breakdown);
            return Err(Error::Breakdown {
                k: state.k,
                source: Box::new(Error::InvalidArgument("iterate is not finite".into())),
                report: Box::new(report),
            });
        }
        if r <= stop.tol {
            report.stop = Some(StopReason::Residual);
            return Ok((state.x, report));
        }
        if inc <= stop.h_tol {
            report.stop = Some(StopReason::Increment);
            return Ok((state.x, report));
        }
    }
}
