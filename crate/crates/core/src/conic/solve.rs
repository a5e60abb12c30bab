//! Lowers the IR to the Clarabel interior-point solver.
//!
//! Clarabel solves `min q'x  s.t. Ax + s = b, s in K`: each cone constraint
//! `e(z) in K` becomes the slack rows `s = b - A z` with `A = -F`, `b = g`
//! for `e(z) = g + F z`, and the maximize objective flips sign. PSD blocks
//! are packed in Clarabel's scaled-triangle form (column-major upper
//! triangle, off-diagonals times sqrt(2)).

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, ExponentialConeT, IPSolver, NonnegativeConeT, PSDTriangleConeT,
    SecondOrderConeT, SolverStatus, SupportedConeT,
};

use super::program::{ConeConstraint, ConicProgram, LinExpr, SolveStatus, SolverResult};

/// Default solver tolerance: an optimal result satisfies every cone to
/// within this value.
pub const DEFAULT_TOL: f64 = 1e-7;

fn pin_blas_threads() {
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_some() {
        return;
    }
    use std::os::raw::{c_char, c_int, c_void};
    extern "C" {
        fn dlsym(handle: *mut c_void, symbol: *const c_char) -> *mut c_void;
    }
    // RTLD_DEFAULT on glibc; a non-OpenBLAS backend simply lacks the symbol.
    unsafe {
        let sym = dlsym(std::ptr::null_mut(), c"openblas_set_num_threads".as_ptr());
        if !sym.is_null() {
            let set_threads: extern "C" fn(c_int) = std::mem::transmute(sym);
            set_threads(1);
        }
    }
}

struct RowBuilder {
    rows: usize,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

impl RowBuilder {
    fn new() -> Self {
        Self {
            rows: 0,
            triplets: Vec::new(),
            b: Vec::new(),
        }
    }

    fn push_expr(&mut self, e: &LinExpr, scale: f64) {
        let row = self.rows;
        for &(var, coeff) in &e.terms {
            self.triplets.push((row, var, -scale * coeff));
        }
        self.b.push(scale * e.constant);
        self.rows += 1;
    }
}

/// Solve the program to the given cone tolerance.
///
/// Never panics on solver breakdown: failures surface as
/// [`SolveStatus::NumericalFailure`] with whatever primal point Clarabel
/// last produced.
pub fn solve(prog: &ConicProgram, tol: f64) -> SolverResult {
    // The PSD-cone kernels run through BLAS; threaded BLAS oversubscribes
    // on the small dense blocks these programs produce. An explicit
    // OPENBLAS_NUM_THREADS setting is respected.
    static BLAS_THREADS: std::sync::Once = std::sync::Once::new();
    BLAS_THREADS.call_once(pin_blas_threads);

    let n = prog.n_vars();
    let mut rb = RowBuilder::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    for c in prog.constraints() {
        match c {
            ConeConstraint::Nonnegative(e) => {
                rb.push_expr(e, 1.0);
                cones.push(NonnegativeConeT(1));
            }
            ConeConstraint::SecondOrder { head, tail } => {
                rb.push_expr(head, 1.0);
                for e in tail {
                    rb.push_expr(e, 1.0);
                }
                cones.push(SecondOrderConeT(tail.len() + 1));
            }
            ConeConstraint::Exponential { a, b, c } => {
                rb.push_expr(a, 1.0);
                rb.push_expr(b, 1.0);
                rb.push_expr(c, 1.0);
                cones.push(ExponentialConeT());
            }
            ConeConstraint::PsdBlock { dim, entries } => {
                let sqrt2 = 2.0f64.sqrt();
                for col in 0..*dim {
                    for row in 0..=col {
                        let scale = if row == col { 1.0 } else { sqrt2 };
                        rb.push_expr(&entries[row * dim + col], scale);
                    }
                }
                cones.push(PSDTriangleConeT(*dim));
            }
        }
    }

    let (rows, cols, vals): (Vec<usize>, Vec<usize>, Vec<f64>) = {
        let mut r = Vec::with_capacity(rb.triplets.len());
        let mut c = Vec::with_capacity(rb.triplets.len());
        let mut v = Vec::with_capacity(rb.triplets.len());
        for (ri, ci, vi) in rb.triplets {
            r.push(ri);
            c.push(ci);
            v.push(vi);
        }
        (r, c, v)
    };
    let a = CscMatrix::new_from_triplets(rb.rows, n, rows, cols, vals);
    let p = CscMatrix::zeros((n, n));
    let q: Vec<f64> = prog.objective_coeffs().iter().map(|c| -c).collect();

    let inner_tol = (tol * 1e-2).clamp(1e-12, 1e-8);
    let settings = DefaultSettings {
        verbose: false,
        tol_gap_abs: inner_tol,
        tol_gap_rel: inner_tol,
        tol_feas: inner_tol,
        max_iter: 200,
        ..DefaultSettings::default()
    };

    let solved = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        let mut solver = DefaultSolver::new(&p, &q, &a, &rb.b, &cones, settings);
        solver.solve();
        (
            solver.solution.status,
            solver.solution.x.clone(),
            solver.info.iterations as usize,
        )
    }));

    let (status, x, iterations) = match solved {
        Ok(t) => t,
        Err(_) => {
            return SolverResult {
                status: SolveStatus::NumericalFailure,
                primal: vec![0.0; n],
                objective_value: 0.0,
                max_cone_residual: f64::INFINITY,
                iterations: 0,
            }
        }
    };

    let residual = prog.max_residual(&x);
    let objective_value = prog.objective_value(&x);
    let status = match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            if residual <= tol {
                SolveStatus::Optimal
            } else {
                SolveStatus::NumericalFailure
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    };

    SolverResult {
        status,
        primal: x,
        objective_value,
        max_cone_residual: residual,
        iterations,
    }
}
