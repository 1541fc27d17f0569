//! Per-iteration convergence records and their CSV form.
//!
//! A report file starts with `# key=value` metadata lines, followed by a
//! header row and one row per iterate `X_k`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::iterations::MethodTag;

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Residual,
    Increment,
    MaxIter,
    Breakdown,
}

impl StopReason {
    pub fn is_success(self) -> bool {
        matches!(self, StopReason::Residual | StopReason::Increment)
    }

    fn as_str(self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::Increment => "increment",
            StopReason::MaxIter => "max-iter",
            StopReason::Breakdown => "breakdown",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            StopReason::Residual,
            StopReason::Increment,
            StopReason::MaxIter,
            StopReason::Breakdown,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown stop reason `{s}`")))
    }
}

/// One iterate. `increment_norm` is `||X_k - X_{k-1}||_F / ||X_k||_F` (NaN at
/// `k = 0`); `wall_ms` is the time spent producing `X_k` from `X_{k-1}`;
/// counter columns are cumulative and exclude residual evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub residual: f64,
    pub increment_norm: f64,
    pub wall_ms: f64,
    pub cum_matmuls: u64,
    pub cum_lus: u64,
    pub cum_flop_estimate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub method: MethodTag,
    pub p: usize,
    pub n: usize,
    pub label: String,
    pub stop: Option<StopReason>,
    pub rows: Vec<IterRecord>,
}

const HEADER: [&str; 7] = [
    "k",
    "residual",
    "increment_norm",
    "wall_ms",
    "cum_matmuls",
    "cum_lus",
    "cum_flop_estimate",
];

impl ConvergenceReport {
    pub fn new(method: MethodTag, p: usize, n: usize) -> Self {
        ConvergenceReport {
            method,
            p,
            n,
            label: String::new(),
            stop: None,
            rows: Vec::new(),
        }
    }

    /// Number of steps taken (the index of the last iterate).
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.k)
    }

    pub fn final_residual(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.residual)
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.rows.iter().map(|r| r.wall_ms).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# method={}", self.method)?;
        writeln!(out, "# p={}", self.p)?;
        writeln!(out, "# n={}", self.n)?;
        writeln!(out, "# matrix={}", self.label.replace('\n', " "))?;
        let stop = self.stop.map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(out, "# stop={stop}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                format!("{:.6e}", r.residual),
                format!("{:.6e}", r.increment_norm),
                format!("{:.3}", r.wall_ms),
                r.cum_matmuls.to_string(),
                r.cum_lus.to_string(),
                format!("{:.6e}", r.cum_flop_estimate),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let bad = |msg: String| Error::InvalidArgument(format!("report: {msg}"));
        let mut meta = std::collections::HashMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line[1..].trim().split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        }
        let field = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing `{k}`")));
        let num = |k: &str| -> Result<usize> {
            field(k)?.parse().map_err(|_| bad(format!("bad `{k}`")))
        };
        let mut report = ConvergenceReport::new(field("method")?.parse()?, num("p")?, num("n")?);
        report.label = field("matrix")?;
        report.stop = match field("stop")?.as_str() {
            "none" => None,
            s => Some(s.parse()?),
        };
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        for rec in r.records() {
            let rec = rec?;
            let get = |i: usize| rec.get(i).ok_or_else(|| bad(format!("short row {rec:?}")));
            let f = |i: usize| -> Result<f64> {
                get(i)?.parse().map_err(|_| bad(format!("bad number in {rec:?}")))
            };
            let u = |i: usize| -> Result<u64> {
                get(i)?.parse().map_err(|_| bad(format!("bad count in {rec:?}")))
            };
            report.rows.push(IterRecord {
                k: u(0)? as usize,
                residual: f(1)?,
                increment_norm: f(2)?,
                wall_ms: f(3)?,
                cum_matmuls: u(4)?,
                cum_lus: u(5)?,
                cum_flop_estimate: f(6)?,
            });
        }
        Ok(report)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
