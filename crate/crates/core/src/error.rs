use std::path::PathBuf;

use crate::report::ConvergenceReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch ({}x{} vs {}x{})", .left.0, .left.1, .right.0, .right.1)]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is singular to working precision (pivot {pivot}, |u| = {magnitude:e})")]
    Singular { pivot: usize, magnitude: f64 },

    #[error("iteration broke down at k = {k}: {source}")]
    Breakdown {
        k: usize,
        #[source]
        source: Box<Error>,
        report: Box<ConvergenceReport>,
    },

    #[error("no convergence after {} iterations (last residual {:e}); {hint}", .report.iterations(), .report.final_residual())]
    NonConvergence {
        report: Box<ConvergenceReport>,
        hint: &'static str,
    },

    #[error("evaluation plan has degree {found}, iteration needs degree {expected}")]
    PlanDegree { expected: usize, found: usize },

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Convergence report attached to a failed run, if any.
    pub fn report(&self) -> Option<&ConvergenceReport> {
        match self {
            Error::Breakdown { report, .. } | Error::NonConvergence { report, .. } => Some(report),
            _ => None,
        }
    }
}
