//! Solver-agnostic conic-program intermediate representation.
//!
//! A [`ConicProgram`] is a linear maximization over real scalar variables
//! subject to cone memberships of affine expressions: nonnegative halfspaces,
//! second-order cones, exponential cones `(a, b, c): c >= b*e^(a/b), b > 0`,
//! and PSD blocks of symmetric affine matrices. Complex data never reaches
//! the IR: Hermitian matrix variables are carried through their real
//! symmetric embedding (see [`herm_to_real`]) and every complex quadratic
//! form is expanded to a real linear functional at build time.
//!
//! [`solve`](solve::solve) lowers the IR to the Clarabel interior-point
//! solver; [`subproblem`] builds the successive-convex-approximation
//! iteration subproblem in this IR.

mod program;
pub mod solve;
pub mod subproblem;

pub use program::{ConeConstraint, ConicProgram, LinExpr, SolveStatus, SolverResult};
pub use subproblem::{build_sca_subproblem, extract_covariances, ScaPoint, ScaSubproblem};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("matrix is not Hermitian: ||W - W^H|| = {0}")]
    NotHermitian(f64),
    #[error("extraction failure: {0}")]
    ExtractionFailure(String),
}

/// Real symmetric embedding of a complex Hermitian matrix.
///
/// For `W = A + iB` returns `[[A, -B], [B, A]]`: the result is PSD iff `W`
/// is PSD, its eigenvalues are those of `W` with multiplicity doubled, and
/// its trace is `2 trace(W)`.
pub fn herm_to_real(w: &DMatrix<Complex64>) -> Result<DMatrix<f64>, ConicError> {
    let n = w.nrows();
    let dev = (w - w.adjoint()).norm();
    if dev > 1e-9 {
        return Err(ConicError::NotHermitian(dev));
    }
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let a = w[(r, c)].re;
            let b = w[(r, c)].im;
            m[(r, c)] = a;
            m[(n + r, n + c)] = a;
            m[(r, n + c)] = -b;
            m[(n + r, c)] = b;
        }
    }
    Ok(m)
}

/// Inverse of [`herm_to_real`]: averages the redundant blocks so the round
/// trip is exact for well-formed embeddings.
pub fn real_to_herm(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = m.nrows() / 2;
    DMatrix::from_fn(n, n, |r, c| {
        let a = 0.5 * (m[(r, c)] + m[(n + r, n + c)]);
        let b = 0.5 * (m[(n + r, c)] - m[(r, n + c)]);
        Complex64::new(a, b)
    })
}
