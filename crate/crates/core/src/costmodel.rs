//! Per-iteration cost of each method as the exact coefficient of `n^3`.
//!
//! Products cost 2, right divisions 8/3. The product counts come from the
//! schedules the step functions actually run, so the model can be checked
//! against an instrumented step with exact equality.

use std::io::{Read, Write};

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::iterations::{MethodTag, RootIteration};
use crate::linalg::{power_cost, OpCounter};
use crate::polyplan::build_plan;
use crate::precondition::precondition;
use crate::source::gen_random_spd;

#[derive(Clone, Debug, PartialEq)]
pub struct CostEntry {
    pub method: MethodTag,
    pub p: usize,
    pub matmuls: u64,
    pub lus: u64,
    pub cubic_coeff: Rational64,
    pub formula_text: String,
}

fn coeff(matmuls: u64, lus: u64) -> Rational64 {
    Rational64::from_integer(2 * matmuls as i64) + Rational64::new(8 * lus as i64, 3)
}

/// `(products, right divisions)` one step of `method` spends.
pub fn step_counts(method: MethodTag, p: usize) -> (u64, u64) {
    let p64 = p as u64;
    match method {
        MethodTag::Plain => (power_cost(p64 - 1) + 1, 1),
        MethodTag::In => (p64 - 1, 2),
        MethodTag::Iter39 => (power_cost(p64 - 1) + 2, 1),
        MethodTag::Coupled => (power_cost(p64) + 2, 1),
        MethodTag::Variant => (build_plan(p - 2).matmul_cost() as u64 + 2, 1),
    }
}

pub fn cost_entry(method: MethodTag, p: usize) -> CostEntry {
    assert!(p >= 2, "p must be at least 2");
    let (matmuls, lus) = step_counts(method, p);
    let cubic_coeff = coeff(matmuls, lus);
    // Split as integer + (8/3, 10/3, ...) the way flop counts are usually quoted.
    let frac = if lus == 0 {
        Rational64::from_integer(0)
    } else {
        Rational64::new(2 * lus as i64 + 6, 3)
    };
    let int = cubic_coeff - frac;
    let formula_text = if frac == Rational64::from_integer(0) {
        format!("{int}n^3")
    } else {
        format!("({int}+{frac})n^3")
    };
    CostEntry {
        method,
        p,
        matmuls,
        lus,
        cubic_coeff,
        formula_text,
    }
}

/// `floor(2 log2(m))` for `m >= 1`, computed exactly as `floor(log2(m^2))`.
pub fn floor_two_log2(m: u64) -> u64 {
    assert!(m >= 1);
    let sq = (m as u128) * (m as u128);
    (127 - sq.leading_zeros()) as u64
}

/// The closed form `2 floor(2 log2(p-1)) + 8/3` quoted for the variant.
pub fn variant_closed_form(p: usize) -> Rational64 {
    Rational64::from_integer(2 * floor_two_log2(p as u64 - 1) as i64) + Rational64::new(8, 3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub p: usize,
    pub in_coeff: Rational64,
    pub variant_coeff: Rational64,
    pub iter39_coeff: Rational64,
    pub closed_form: Rational64,
}

impl CostRow {
    pub fn agrees(&self) -> bool {
        self.variant_coeff == self.closed_form
    }

    pub fn variant_over_in(&self) -> f64 {
        ratio_f64(self.variant_coeff / self.in_coeff)
    }
}

pub fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn cost_curve(p_min: usize, p_max: usize) -> Vec<CostRow> {
    (p_min.max(2)..=p_max)
        .map(|p| CostRow {
            p,
            in_coeff: cost_entry(MethodTag::In, p).cubic_coeff,
            variant_coeff: cost_entry(MethodTag::Variant, p).cubic_coeff,
            iter39_coeff: cost_entry(MethodTag::Iter39, p).cubic_coeff,
            closed_form: variant_closed_form(p),
        })
        .collect()
}

const CURVE_HEADER: [&str; 10] = [
    "p",
    "in",
    "variant",
    "iter39",
    "variant_closed_form",
    "agrees",
    "variant_over_in",
    "in_formula",
    "variant_formula",
    "iter39_formula",
];

pub fn write_cost_csv<W: Write>(out: W, rows: &[CostRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            r.p.to_string(),
            r.in_coeff.to_string(),
            r.variant_coeff.to_string(),
            r.iter39_coeff.to_string(),
            r.closed_form.to_string(),
            r.agrees().to_string(),
            format!("{:.6}", r.variant_over_in()),
            cost_entry(MethodTag::In, r.p).formula_text,
            cost_entry(MethodTag::Variant, r.p).formula_text,
            cost_entry(MethodTag::Iter39, r.p).formula_text,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cost_csv<R: Read>(input: R) -> Result<Vec<CostRow>> {
    let mut rows = Vec::new();
    let bad = |what: &str| Error::InvalidArgument(format!("cost csv: bad {what}"));
    for rec in csv::Reader::from_reader(input).records() {
        let rec = rec?;
        let q = |i: usize, what: &str| -> Result<Rational64> {
            rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| bad(what))
        };
        let row = CostRow {
            p: rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("p"))?,
            in_coeff: q(1, "in")?,
            variant_coeff: q(2, "variant")?,
            iter39_coeff: q(3, "iter39")?,
            closed_form: q(4, "closed form")?,
        };
        if rec.get(5) != Some(&row.agrees().to_string()) {
            return Err(bad("agrees flag"));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Outcome of [`validate_counts`] when the instrumented step matches the model.
#[derive(Clone, Debug, PartialEq)]
pub struct CountCheck {
    pub entry: CostEntry,
    pub counted_matmuls: u64,
    pub counted_lus: u64,
    pub counted_coeff: Rational64,
}

/// Runs one instrumented step on a seeded `n x n` SPD problem and compares
/// its counter against [`cost_entry`]. A mismatch is an error whose message
/// lists both sides.
pub fn validate_counts(n: usize, p: usize, method: MethodTag) -> Result<CountCheck> {
    let a = gen_random_spd(n, 10.0, 0x5eed);
    let problem = precondition(&a, p, &mut OpCounter::new())?;
    let iter = RootIteration::new(&problem.a_tilde, p, method)?;
    let mut counter = OpCounter::new();
    iter.step(&iter.initial_state(), &mut counter)?;
    let entry = cost_entry(method, p);
    let check = CountCheck {
        counted_matmuls: counter.matmul_count(),
        counted_lus: counter.lu_count(),
        counted_coeff: counter.cubic_coeff(),
        entry,
    };
    if check.counted_coeff != check.entry.cubic_coeff
        || check.counted_matmuls != check.entry.matmuls
        || check.counted_lus != check.entry.lus
    {
        return Err(Error::InvalidArgument(format!(
            "{method} p={p} n={n}: counted {} products + {} divisions = {} n^3, modelled {} + {} = {} n^3",
            check.counted_matmuls,
            check.counted_lus,
            check.counted_coeff,
            check.entry.matmuls,
            check.entry.lus,
            check.entry.cubic_coeff,
        )));
    }
    Ok(check)
}
