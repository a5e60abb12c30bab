//! The conic-program IR itself: variables, affine expressions, cone
//! constraints, residual evaluation, and a plain-text sparse debug dump.

use std::io::{self, Write};

/// Sparse affine expression `constant + sum coeff * z[var]`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(idx: usize) -> Self {
        Self {
            terms: vec![(idx, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(idx: usize, coeff: f64) -> Self {
        Self {
            terms: vec![(idx, coeff)],
            constant: 0.0,
        }
    }

    pub fn push(&mut self, idx: usize, coeff: f64) {
        if coeff != 0.0 {
            self.terms.push((idx, coeff));
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add(&mut self, other: &LinExpr, scale: f64) {
        self.constant += scale * other.constant;
        for &(i, c) in &other.terms {
            self.push(i, scale * c);
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * z[i]).sum::<f64>()
    }

    /// Merged, sorted terms for structural comparison.
    fn canonical(&self) -> (Vec<(usize, f64)>, f64) {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        (merged, self.constant)
    }

    fn structurally_equal(&self, other: &LinExpr) -> bool {
        self.canonical() == other.canonical()
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }
}

/// One cone membership constraint over affine expressions.
#[derive(Debug, Clone)]
pub enum ConeConstraint {
    /// `expr >= 0`.
    Nonnegative(LinExpr),
    /// `head >= || tail ||`.
    SecondOrder { head: LinExpr, tail: Vec<LinExpr> },
    /// `(a, b, c)` with `c >= b * e^(a/b)`, `b > 0`.
    Exponential { a: LinExpr, b: LinExpr, c: LinExpr },
    /// Symmetric affine matrix (row-major, `dim * dim` entries) `>= 0`.
    PsdBlock { dim: usize, entries: Vec<LinExpr> },
}

/// Termination status of a conic solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Solution of a [`ConicProgram`] with the primal point, the objective in
/// the maximize convention, and the worst cone violation at that point.
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub max_cone_residual: f64,
    pub iterations: usize,
}

/// Linear maximization over cone-constrained real variables.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    n_vars: usize,
    var_names: Vec<String>,
    objective: Vec<f64>,
    constraints: Vec<ConeConstraint>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.var_names.push(name.into());
        self.objective.push(0.0);
        self.n_vars += 1;
        self.n_vars - 1
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn var_name(&self, idx: usize) -> &str {
        &self.var_names[idx]
    }

    /// Objective coefficient for `maximize c^T z`.
    pub fn set_objective(&mut self, idx: usize, coeff: f64) {
        self.objective[idx] = coeff;
    }

    pub fn objective_coeffs(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(z.iter())
            .map(|(c, v)| c * v)
            .sum()
    }

    pub fn constraints(&self) -> &[ConeConstraint] {
        &self.constraints
    }

    fn check_expr(&self, e: &LinExpr) {
        if let Some(mx) = e.max_var() {
            assert!(
                mx < self.n_vars,
                "expression references undeclared variable {mx}"
            );
        }
    }

    pub fn add_nonneg(&mut self, expr: LinExpr) {
        self.check_expr(&expr);
        self.constraints.push(ConeConstraint::Nonnegative(expr));
    }

    pub fn add_second_order(&mut self, head: LinExpr, tail: Vec<LinExpr>) {
        self.check_expr(&head);
        for e in &tail {
            self.check_expr(e);
        }
        self.constraints
            .push(ConeConstraint::SecondOrder { head, tail });
    }

    pub fn add_exponential(&mut self, a: LinExpr, b: LinExpr, c: LinExpr) {
        self.check_expr(&a);
        self.check_expr(&b);
        self.check_expr(&c);
        self.constraints
            .push(ConeConstraint::Exponential { a, b, c });
    }

    /// Adds a PSD block; panics unless the entry matrix is structurally
    /// symmetric.
    pub fn add_psd_block(&mut self, dim: usize, entries: Vec<LinExpr>) {
        assert_eq!(entries.len(), dim * dim, "PSD block must be square");
        for e in &entries {
            self.check_expr(e);
        }
        for r in 0..dim {
            for c in (r + 1)..dim {
                assert!(
                    entries[r * dim + c].structurally_equal(&entries[c * dim + r]),
                    "PSD block entries ({r},{c}) and ({c},{r}) differ as expressions"
                );
            }
        }
        self.constraints
            .push(ConeConstraint::PsdBlock { dim, entries });
    }

    /// Worst violation of any cone membership at the point `z`.
    pub fn max_residual(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            worst = worst.max(constraint_residual(c, z));
        }
        worst
    }

    /// Plain-text sparse dump: a cone directory header, then one line per
    /// nonzero coefficient (`row var coeff`) and per constant
    /// (`row const value`). Rows number the scalar components of the cone
    /// constraints in order.
    pub fn write_debug(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "vars {}", self.n_vars)?;
        for (i, name) in self.var_names.iter().enumerate() {
            writeln!(w, "var {i} {name}")?;
        }
        writeln!(w, "objective maximize")?;
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                writeln!(w, "obj {i} {c:.17e}")?;
            }
        }
        writeln!(w, "cones {}", self.constraints.len())?;
        let mut row = 0usize;
        let mut dirs = Vec::new();
        let mut body: Vec<(usize, &LinExpr)> = Vec::new();
        for (ci, c) in self.constraints.iter().enumerate() {
            match c {
                ConeConstraint::Nonnegative(e) => {
                    dirs.push(format!("cone {ci} nonneg rows {row} 1"));
                    body.push((row, e));
                    row += 1;
                }
                ConeConstraint::SecondOrder { head, tail } => {
                    dirs.push(format!("cone {ci} soc rows {row} {}", tail.len() + 1));
                    body.push((row, head));
                    row += 1;
                    for e in tail {
                        body.push((row, e));
                        row += 1;
                    }
                }
                ConeConstraint::Exponential { a, b, c } => {
                    dirs.push(format!("cone {ci} exp rows {row} 3"));
                    for e in [a, b, c] {
                        body.push((row, e));
                        row += 1;
                    }
                }
                ConeConstraint::PsdBlock { dim, entries } => {
                    dirs.push(format!("cone {ci} psd dim {dim} rows {row} {}", dim * dim));
                    for e in entries {
                        body.push((row, e));
                        row += 1;
                    }
                }
            }
        }
        for d in &dirs {
            writeln!(w, "{d}")?;
        }
        for (r, e) in body {
            for &(v, coeff) in &e.terms {
                writeln!(w, "{r} {v} {coeff:.17e}")?;
            }
            if e.constant != 0.0 {
                writeln!(w, "{r} const {:.17e}", e.constant)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn constraint_residual(c: &ConeConstraint, z: &[f64]) -> f64 {
    match c {
        ConeConstraint::Nonnegative(e) => (-e.eval(z)).max(0.0),
        ConeConstraint::SecondOrder { head, tail } => {
            let norm = tail.iter().map(|e| e.eval(z).powi(2)).sum::<f64>().sqrt();
            (norm - head.eval(z)).max(0.0)
        }
        ConeConstraint::Exponential { a, b, c } => {
            let (av, bv, cv) = (a.eval(z), b.eval(z), c.eval(z));
            if bv > 0.0 {
                (bv * (av / bv).exp() - cv).max(0.0)
            } else {
                // Closure of the cone: b = 0 requires a <= 0, c >= 0.
                (-bv).max(0.0) + av.max(0.0) + (-cv).max(0.0)
            }
        }
        ConeConstraint::PsdBlock { dim, entries } => {
            let m = nalgebra::DMatrix::from_fn(*dim, *dim, |r, c| {
                0.5 * (entries[r * dim + c].eval(z) + entries[c * dim + r].eval(z))
            });
            let min_eig = m
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            (-min_eig).max(0.0)
        }
    }
}
