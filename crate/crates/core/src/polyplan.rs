//! Straight-line programs for the geometric polynomial
//! `P_d(X) = I + X + X^2 + ... + X^d`.
//!
//! The builder applies the halving identities
//!
//! ```text
//! P_d(Y) = P_{(d-1)/2}(Y^2) (Y + I)              d odd,  d >= 3
//! P_d(Y) = P_{(d-2)/2}(Y^2) (Y^2 + Y) + I        d even, d >= 4
//! ```
//!
//! recursively, with `P_1(Y) = Y + I` and `P_2(Y) = Y^2 + Y + I` as leaves.
//! Every level works in `Y = X^(2^j)`, and all levels draw their powers from
//! a single squaring chain `X, X^2, X^4, ...`, so each power is formed once.

use std::fmt;

use crate::error::Result;
use crate::linalg::{linear_combination, matmul, Matrix, OpCounter};

/// Index into the value table of a plan. Slot 0 holds the input `X`.
pub type Slot = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum StepKind {
    Square(Slot),
    Product(Slot, Slot),
    /// `sum coef * slot + identity_coef * I`.
    Affine {
        terms: Vec<(f64, Slot)>,
        identity_coef: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub kind: StepKind,
    pub dst: Slot,
}

impl Step {
    pub fn is_product(&self) -> bool {
        matches!(self.kind, StepKind::Square(_) | StepKind::Product(..))
    }
}

/// Immutable evaluation program for `P_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPlan {
    degree: usize,
    steps: Vec<Step>,
    result_slot: Slot,
    matmul_cost: usize,
}

impl EvalPlan {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn result_slot(&self) -> Slot {
        self.result_slot
    }

    /// Number of counted products (squarings included) one evaluation costs.
    pub fn matmul_cost(&self) -> usize {
        self.matmul_cost
    }

    pub fn square_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.kind, StepKind::Square(_)))
            .count()
    }

    fn slot_count(&self) -> usize {
        self.steps.len() + 1
    }

    /// Factored form in bracket notation, e.g. `{X^2+I}{X+I}` for `d = 3`.
    pub fn factored_form(&self) -> String {
        render(&expr(self.degree, 0), 0)
    }
}

impl fmt::Display for EvalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P_{}(X) = {}", self.degree, self.factored_form())
    }
}

struct Builder {
    steps: Vec<Step>,
    /// `chain[j]` is the slot holding `X^(2^j)`.
    chain: Vec<Slot>,
}

impl Builder {
    fn push(&mut self, kind: StepKind) -> Slot {
        let dst = self.steps.len() + 1;
        self.steps.push(Step { kind, dst });
        dst
    }

    fn power(&mut self, level: usize) -> Slot {
        while self.chain.len() <= level {
            let prev = *self.chain.last().expect("chain starts at X");
            let sq = self.push(StepKind::Square(prev));
            self.chain.push(sq);
        }
        self.chain[level]
    }

    fn affine(&mut self, terms: Vec<(f64, Slot)>, identity_coef: f64) -> Slot {
        self.push(StepKind::Affine {
            terms,
            identity_coef,
        })
    }

    /// Emits steps for `P_d(X^(2^level))` and returns its slot.
    fn geometric(&mut self, d: usize, level: usize) -> Slot {
        match d {
            0 => self.affine(vec![], 1.0),
            1 => {
                let y = self.power(level);
                self.affine(vec![(1.0, y)], 1.0)
            }
            2 => {
                let y = self.power(level);
                let y2 = self.power(level + 1);
                self.affine(vec![(1.0, y2), (1.0, y)], 1.0)
            }
            _ if d % 2 == 1 => {
                let y = self.power(level);
                let inner = self.geometric((d - 1) / 2, level + 1);
                let factor = self.affine(vec![(1.0, y)], 1.0);
                self.push(StepKind::Product(inner, factor))
            }
            _ => {
                let y = self.power(level);
                let y2 = self.power(level + 1);
                let inner = self.geometric((d - 2) / 2, level + 1);
                let factor = self.affine(vec![(1.0, y2), (1.0, y)], 0.0);
                let prod = self.push(StepKind::Product(inner, factor));
                self.affine(vec![(1.0, prod)], 1.0)
            }
        }
    }
}

/// Builds the plan for `P_d`. `d == 0` yields the constant plan `I`.
pub fn build_plan(d: usize) -> EvalPlan {
    let mut b = Builder {
        steps: Vec::new(),
        chain: vec![0],
    };
    let result_slot = b.geometric(d, 0);
    let matmul_cost = b.steps.iter().filter(|s| s.is_product()).count();
    EvalPlan {
        degree: d,
        steps: b.steps,
        result_slot,
        matmul_cost,
    }
}

/// Runs `plan` on `x`, spending exactly `plan.matmul_cost()` counted products.
pub fn eval_plan(plan: &EvalPlan, x: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    let n = x.require_square("eval_plan")?;
    let mut slots: Vec<Option<Matrix>> = vec![None; plan.slot_count()];
    slots[0] = Some(x.clone());
    for step in &plan.steps {
        let value = match &step.kind {
            StepKind::Square(s) => {
                let m = slots[*s].as_ref().expect("defined slot");
                matmul(m, m, counter)?
            }
            StepKind::Product(l, r) => {
                let l = slots[*l].as_ref().expect("defined slot");
                let r = slots[*r].as_ref().expect("defined slot");
                matmul(l, r, counter)?
            }
            StepKind::Affine {
                terms,
                identity_coef,
            } => {
                let mut refs = Vec::with_capacity(terms.len());
                for &(c, s) in terms {
                    refs.push((c, slots[s].as_ref().expect("defined slot")));
                }
                linear_combination(&refs, *identity_coef, n)?
            }
        };
        slots[step.dst] = Some(value);
    }
    let result = slots[plan.result_slot].take();
    Ok(result.expect("result slot is written"))
}

/// `(p, products per variant iteration)` for `p` in `p_min..=p_max`: the cost
/// of `P_{p-2}` plus the two products that close the increment update.
pub fn plan_cost_table(p_min: usize, p_max: usize) -> Vec<(usize, usize)> {
    (p_min.max(2)..=p_max)
        .map(|p| (p, build_plan(p - 2).matmul_cost() + 2))
        .collect()
}

// ---------------------------------------------------------------------------
// Factored-form rendering.
//
// A product of factors renders each factor in the delimiter of its depth
// ({}, then [], then ()); nested products are flattened into their parent.

enum Expr {
    /// A sum of powers of `X`, exponents descending, optionally `+I`.
    Atom(Vec<usize>, bool),
    Product(Vec<Expr>),
    PlusIdentity(Box<Expr>),
}

fn expr(d: usize, level: usize) -> Expr {
    let y = 1usize << level;
    match d {
        0 => Expr::Atom(vec![], true),
        1 => Expr::Atom(vec![y], true),
        2 => Expr::Atom(vec![2 * y, y], true),
        _ if d % 2 == 1 => {
            let mut factors = flatten(expr((d - 1) / 2, level + 1));
            factors.push(Expr::Atom(vec![y], true));
            Expr::Product(factors)
        }
        _ => {
            let mut factors = flatten(expr((d - 2) / 2, level + 1));
            factors.push(Expr::Atom(vec![2 * y, y], false));
            Expr::PlusIdentity(Box::new(Expr::Product(factors)))
        }
    }
}

fn flatten(e: Expr) -> Vec<Expr> {
    match e {
        Expr::Product(factors) => factors,
        other => vec![other],
    }
}

fn delimiters(depth: usize) -> (char, char) {
    match depth {
        0 => ('{', '}'),
        1 => ('[', ']'),
        _ => ('(', ')'),
    }
}

fn render_power(e: usize) -> String {
    if e == 1 {
        "X".to_string()
    } else {
        format!("X^{e}")
    }
}

fn render(e: &Expr, depth: usize) -> String {
    match e {
        Expr::Atom(powers, plus_i) => {
            let mut parts: Vec<String> = powers.iter().map(|&k| render_power(k)).collect();
            if *plus_i {
                parts.push("I".to_string());
            }
            parts.join("+")
        }
        Expr::Product(factors) => {
            let (open, close) = delimiters(depth);
            factors
                .iter()
                .map(|f| format!("{open}{}{close}", render(f, depth + 1)))
                .collect()
        }
        Expr::PlusIdentity(inner) => format!("{}+I", render(inner, depth)),
    }
}
