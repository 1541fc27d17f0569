//! Scaling a matrix into the global-convergence region of the iterations.
//!
//! `A~ = A^(1/2) / ||A^(1/2)||_F` has every eigenvalue in
//! `{Re z > 0, |z| <= 1}` whenever `A` has no eigenvalues on the closed
//! negative real axis. The root of `A` is recovered from the root `Y` of `A~`
//! as `A^(1/p) = c^(2/p) Y^2`, where `c = ||A^(1/2)||_F`.

use crate::error::{Error, Result};
use crate::iterations::{run, MethodTag, StoppingRule};
use crate::linalg::{matmul, Matrix, OpCounter};

#[derive(Clone, Debug)]
pub struct PreconditionedProblem {
    pub a_tilde: Matrix,
    /// `c = ||A^(1/2)||_F`.
    pub scale: f64,
    pub original: Matrix,
    pub p: usize,
}

/// Principal square root by the coupled iteration with `p = 2`, run on
/// `a / ||a||_F`.
pub fn sqrt_newton(a: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    a.require_square("sqrt_newton")?;
    let norm = a.frob_norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("square root of the zero matrix".into()));
    }
    let scaled = a.scaled(1.0 / norm);
    // Polish to roundoff: the root feeds every later residual.
    let stop = StoppingRule {
        tol: 1e-15,
        h_tol: 1e-15,
        max_iter: 100,
    };
    let root = match run(&scaled, 2, MethodTag::Coupled, &stop, counter) {
        Ok((x, _)) => x,
        Err(Error::NonConvergence { report, .. }) => {
            return Err(Error::NonConvergence {
                report,
                hint: "square root failed; A may have nonpositive real eigenvalues",
            })
        }
        Err(e) => return Err(e),
    };
    Ok(root.scaled(norm.sqrt()))
}

pub fn precondition(a: &Matrix, p: usize, counter: &mut OpCounter) -> Result<PreconditionedProblem> {
    let sqrt = sqrt_newton(a, counter)?;
    let scale = sqrt.frob_norm();
    Ok(PreconditionedProblem {
        a_tilde: sqrt.scaled(1.0 / scale),
        scale,
        original: a.clone(),
        p,
    })
}

/// `A^(1/p) = c^(2/p) Y^2` from `Y ~ A~^(1/p)`.
pub fn recover_root(problem: &PreconditionedProblem, y: &Matrix) -> Matrix {
    let y2 = matmul(y, y, &mut OpCounter::new()).expect("square root iterate");
    y2.scaled(problem.scale.powf(2.0 / problem.p as f64))
}
