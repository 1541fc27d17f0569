//! Principal `p`-th roots of matrices by Newton-type iterations.
//!
//! The main method ([`MethodTag::Variant`]) evaluates the polynomial
//! `P_d(F) = I + F + ... + F^d` with a halving plan from [`polyplan`], so one
//! step costs `O(log p)` products instead of `O(p)`. Every product and right
//! division goes through an [`OpCounter`], which makes the cost model in
//! [`costmodel`] checkable against what the code really does.

pub mod bench;
pub mod cli;
pub mod costmodel;
pub mod error;
pub mod iterations;
pub mod linalg;
pub mod mmio;
pub mod polyplan;
pub mod precondition;
pub mod report;
pub mod source;

pub use error::{Error, Result};
pub use iterations::{run, run_iteration, MethodTag, RootIteration, StoppingRule};
pub use linalg::{Matrix, OpCounter};
pub use polyplan::{build_plan, eval_plan, EvalPlan};
pub use precondition::{precondition, recover_root, PreconditionedProblem};
pub use report::{ConvergenceReport, StopReason};
pub use source::MatrixSource;
