//! Cone decomposition of the SCA iteration subproblem.
//!
//! Decision variables per user k: the Hermitian covariance `W_k` (carried as
//! the real/imag parameters of its real symmetric embedding, one PSD block
//! each), the rate surrogates `x_i, y_i, p_i, q_i`, exponential-cone marks
//! `s_i >= e^(x_i)`, `r_i >= e^(q_i)`, and norm epigraph marks
//! `t[i][k] >= ||W_k hbar_i*||`, `u[i][k] >= ||W_k gbar_i*||` (second-order
//! cones over the stacked real and imaginary parts of the matrix-vector
//! product).
//!
//! Constraint families, with `quad_h(i,k) = hbar_i^T W_k hbar_i*`:
//!
//! * signal lower bounds: `sum_k (quad_h(i,k) - 2 eps t[i][k]) + sigma_i^2 >= s_i`
//! * leak lower bounds:   `sum_{k!=i} (quad_g(i,k) - 2 eps u[i][k]) + varsigma_i^2 >= r_i`
//! * linearized interference: `sum_{k!=i} (quad_h(i,k) + 2 eps t[i][k]) + sigma_i^2
//!     <= e^(ytilde_i) (y_i - ytilde_i + 1)`
//! * linearized leakage: `sum_k (quad_g(i,k) + 2 eps u[i][k]) + varsigma_i^2
//!     <= e^(ptilde_i) (p_i - ptilde_i + 1)`
//! * total power: `sum_k trace(W_k) <= P`
//!
//! and the objective maximizes `sum_i (x_i - y_i - p_i + q_i)`; the log2(e)
//! factor that converts nats to bits is applied only when reporting.
//!
//! Substituting the marks `t, u` for the norms is exact at the optimum in
//! the `-2 eps` constraints (the optimizer drives the mark down onto the
//! norm) and restricts the feasible set in the `+2 eps` ones, which keeps
//! every iterate feasible for the true problem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::program::{ConicProgram, LinExpr, SolveStatus, SolverResult};
use super::ConicError;
use crate::channel::ChannelSet;
use crate::rates::CovarianceSet;

/// The built subproblem: the IR plus the variable layout needed to read a
/// solution back out and the linearization point it was built at.
#[derive(Debug, Clone)]
pub struct ScaSubproblem {
    pub program: ConicProgram,
    pub y_tilde: Vec<f64>,
    pub p_tilde: Vec<f64>,
    layout: Layout,
}

#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    k: usize,
}

impl Layout {
    fn n_w_params(&self) -> usize {
        self.n * self.n
    }

    fn w_base(&self, user: usize) -> usize {
        user * self.n_w_params()
    }

    /// Real part A[p][q], p <= q.
    fn idx_a(&self, user: usize, p: usize, q: usize) -> usize {
        debug_assert!(p <= q && q < self.n);
        self.w_base(user) + p * self.n - p * (p + 1) / 2 + q
    }

    /// Imag part B[p][q], p < q (B is skew-symmetric with zero diagonal).
    fn idx_b(&self, user: usize, p: usize, q: usize) -> usize {
        debug_assert!(p < q && q < self.n);
        let na = self.n * (self.n + 1) / 2;
        self.w_base(user) + na + p * (self.n - 1) - p * (p + 1) / 2 + (q - 1)
    }

    fn scalars_base(&self) -> usize {
        self.k * self.n_w_params()
    }

    fn x(&self, i: usize) -> usize {
        self.scalars_base() + i
    }
    fn y(&self, i: usize) -> usize {
        self.scalars_base() + self.k + i
    }
    fn p(&self, i: usize) -> usize {
        self.scalars_base() + 2 * self.k + i
    }
    fn q(&self, i: usize) -> usize {
        self.scalars_base() + 3 * self.k + i
    }
    fn s(&self, i: usize) -> usize {
        self.scalars_base() + 4 * self.k + i
    }
    fn r(&self, i: usize) -> usize {
        self.scalars_base() + 5 * self.k + i
    }
    fn t(&self, i: usize, k: usize) -> usize {
        self.scalars_base() + 6 * self.k + i * self.k + k
    }
    fn u(&self, i: usize, k: usize) -> usize {
        self.scalars_base() + 6 * self.k + self.k * self.k + i * self.k + k
    }

    fn n_vars(&self) -> usize {
        self.k * self.n_w_params() + 6 * self.k + 2 * self.k * self.k
    }

    /// Expression for the signed imaginary parameter B[p][q] at any (p, q).
    fn b_expr(&self, user: usize, p: usize, q: usize) -> LinExpr {
        use std::cmp::Ordering;
        match p.cmp(&q) {
            Ordering::Less => LinExpr::var(self.idx_b(user, p, q)),
            Ordering::Greater => LinExpr::term(self.idx_b(user, q, p), -1.0),
            Ordering::Equal => LinExpr::zero(),
        }
    }

    /// `a^H W_user a` expanded over the A/B parameters.
    fn quad_expr(&self, user: usize, a: &DVector<Complex64>) -> LinExpr {
        let n = self.n;
        let mut e = LinExpr::zero();
        for p in 0..n {
            e.push(self.idx_a(user, p, p), a[p].norm_sqr());
            for q in (p + 1)..n {
                let c = a[p].conj() * a[q];
                e.push(self.idx_a(user, p, q), 2.0 * c.re);
                e.push(self.idx_b(user, p, q), -2.0 * c.im);
            }
        }
        e
    }

    /// Real and imaginary components of `W_user a`, stacked (2n expressions).
    fn matvec_exprs(&self, user: usize, a: &DVector<Complex64>) -> Vec<LinExpr> {
        let n = self.n;
        let mut out = Vec::with_capacity(2 * n);
        for p in 0..n {
            let mut re = LinExpr::zero();
            for q in 0..n {
                let ia = self.idx_a(user, p.min(q), p.max(q));
                re.push(ia, a[q].re);
                re.add(&self.b_expr(user, p, q), -a[q].im);
            }
            out.push(re);
        }
        for p in 0..n {
            let mut im = LinExpr::zero();
            for q in 0..n {
                let ia = self.idx_a(user, p.min(q), p.max(q));
                im.push(ia, a[q].im);
                im.add(&self.b_expr(user, p, q), a[q].re);
            }
            out.push(im);
        }
        out
    }

    /// Entries of the real symmetric embedding `[[A, -B], [B, A]]`.
    fn psd_entries(&self, user: usize) -> Vec<LinExpr> {
        let n = self.n;
        let dim = 2 * n;
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let e = match (r < n, c < n) {
                    (true, true) => LinExpr::var(self.idx_a(user, r.min(c), r.max(c))),
                    (true, false) => {
                        let mut neg = LinExpr::zero();
                        neg.add(&self.b_expr(user, r, c - n), -1.0);
                        neg
                    }
                    (false, true) => self.b_expr(user, r - n, c),
                    (false, false) => {
                        LinExpr::var(self.idx_a(user, (r - n).min(c - n), (r - n).max(c - n)))
                    }
                };
                entries.push(e);
            }
        }
        entries
    }
}

/// Structural size summary used by tests to audit the builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeAudit {
    pub n_vars: usize,
    pub psd_blocks: usize,
    pub soc_cones: usize,
    pub exp_cones: usize,
    pub nonneg_cones: usize,
}

impl ScaSubproblem {
    /// Closed-form size of the subproblem for `(n_tx, k_pairs)`:
    /// `K n^2` covariance parameters plus `6K` scalars plus `2K^2` norm
    /// marks; one PSD block per user, `2K^2` second-order cones, `2K`
    /// exponential cones, `4K + 1` halfspaces.
    pub fn expected_size(n_tx: usize, k_pairs: usize) -> SizeAudit {
        SizeAudit {
            n_vars: k_pairs * n_tx * n_tx + 6 * k_pairs + 2 * k_pairs * k_pairs,
            psd_blocks: k_pairs,
            soc_cones: 2 * k_pairs * k_pairs,
            exp_cones: 2 * k_pairs,
            nonneg_cones: 4 * k_pairs + 1,
        }
    }

    pub fn audit(&self) -> SizeAudit {
        use super::program::ConeConstraint as C;
        let mut a = SizeAudit {
            n_vars: self.program.n_vars(),
            psd_blocks: 0,
            soc_cones: 0,
            exp_cones: 0,
            nonneg_cones: 0,
        };
        for c in self.program.constraints() {
            match c {
                C::Nonnegative(_) => a.nonneg_cones += 1,
                C::SecondOrder { .. } => a.soc_cones += 1,
                C::Exponential { .. } => a.exp_cones += 1,
                C::PsdBlock { .. } => a.psd_blocks += 1,
            }
        }
        a
    }

    /// Residuals of the four rate-constraint families at a solution,
    /// evaluated in their written form (norms computed exactly, not through
    /// the marks): max over i of `|LHS - RHS|`. The interference and
    /// leakage families compare against their linearized right-hand sides
    /// `e^(tilde) (value - tilde + 1)`.
    pub fn activation_residuals(&self, cs: &ChannelSet, result: &SolverResult) -> [f64; 4] {
        let z = &result.primal;
        let l = &self.layout;
        let mats: Vec<DMatrix<Complex64>> = (0..l.k).map(|k| self.read_w(z, k)).collect();
        let mut worst = [0.0f64; 4];
        for i in 0..l.k {
            let quad =
                |ch: &DVector<Complex64>, k: usize| crate::rates::quad_and_norm(ch, &mats[k]);
            let mut sig = cs.sigma2[i];
            let mut interf = cs.sigma2[i];
            let mut leak_all = cs.varsigma2[i];
            let mut leak_other = cs.varsigma2[i];
            for k in 0..l.k {
                let (qh, nh) = quad(&cs.h_est[i], k);
                let (qg, ng) = quad(&cs.g_est[i], k);
                sig += qh - 2.0 * cs.eps * nh;
                leak_all += qg + 2.0 * cs.eps * ng;
                if k != i {
                    interf += qh + 2.0 * cs.eps * nh;
                    leak_other += qg - 2.0 * cs.eps * ng;
                }
            }
            let lin_y = self.y_tilde[i].exp() * (z[l.y(i)] - self.y_tilde[i] + 1.0);
            let lin_p = self.p_tilde[i].exp() * (z[l.p(i)] - self.p_tilde[i] + 1.0);
            worst[0] = worst[0].max((sig - z[l.x(i)].exp()).abs());
            worst[1] = worst[1].max((leak_other - z[l.q(i)].exp()).abs());
            worst[2] = worst[2].max((interf - lin_y).abs());
            worst[3] = worst[3].max((leak_all - lin_p).abs());
        }
        worst
    }

    /// Tightness of the norm epigraph marks at a solution:
    /// max over (i, k) of `t[i][k] - ||W_k hbar_i*||` and the `u` analogue.
    pub fn mark_slack(&self, cs: &ChannelSet, result: &SolverResult) -> f64 {
        let z = &result.primal;
        let l = &self.layout;
        let mats: Vec<DMatrix<Complex64>> = (0..l.k).map(|k| self.read_w(z, k)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..l.k {
            for k in 0..l.k {
                let (_, nh) = crate::rates::quad_and_norm(&cs.h_est[i], &mats[k]);
                let (_, ng) = crate::rates::quad_and_norm(&cs.g_est[i], &mats[k]);
                worst = worst.max((z[l.t(i, k)] - nh).abs());
                worst = worst.max((z[l.u(i, k)] - ng).abs());
            }
        }
        worst
    }

    fn read_w(&self, z: &[f64], user: usize) -> DMatrix<Complex64> {
        let l = &self.layout;
        DMatrix::from_fn(l.n, l.n, |r, c| {
            let a = z[l.idx_a(user, r.min(c), r.max(c))];
            let b = match r.cmp(&c) {
                std::cmp::Ordering::Less => z[l.idx_b(user, r, c)],
                std::cmp::Ordering::Greater => -z[l.idx_b(user, c, r)],
                std::cmp::Ordering::Equal => 0.0,
            };
            Complex64::new(a, b)
        })
    }

    /// Encode covariances and scalar values into a primal vector (used by
    /// tests to exercise extraction in isolation).
    pub fn encode_point(&self, mats: &[DMatrix<Complex64>]) -> Vec<f64> {
        let l = &self.layout;
        let mut z = vec![0.0; l.n_vars()];
        for (k, m) in mats.iter().enumerate() {
            for p in 0..l.n {
                for q in p..l.n {
                    z[l.idx_a(k, p, q)] = m[(p, q)].re;
                    if p < q {
                        z[l.idx_b(k, p, q)] = m[(p, q)].im;
                    }
                }
            }
        }
        z
    }
}

/// Build the iteration subproblem at the linearization point
/// `(y_tilde, p_tilde)` under sum power `power`.
pub fn build_sca_subproblem(
    cs: &ChannelSet,
    power: f64,
    y_tilde: &[f64],
    p_tilde: &[f64],
) -> ScaSubproblem {
    assert!(power > 0.0, "power budget must be positive");
    assert_eq!(y_tilde.len(), cs.k_pairs);
    assert_eq!(p_tilde.len(), cs.k_pairs);
    assert!(
        y_tilde.iter().chain(p_tilde.iter()).all(|v| v.is_finite()),
        "linearization points must be finite"
    );

    let layout = Layout {
        n: cs.n_tx,
        k: cs.k_pairs,
    };
    let mut prog = ConicProgram::new();

    for k in 0..cs.k_pairs {
        for p in 0..cs.n_tx {
            for q in p..cs.n_tx {
                prog.add_var(format!("W{k}.A[{p},{q}]"));
            }
        }
        for p in 0..cs.n_tx {
            for q in (p + 1)..cs.n_tx {
                prog.add_var(format!("W{k}.B[{p},{q}]"));
            }
        }
    }
    for i in 0..cs.k_pairs {
        prog.add_var(format!("x{i}"));
    }
    for i in 0..cs.k_pairs {
        prog.add_var(format!("y{i}"));
    }
    for i in 0..cs.k_pairs {
        prog.add_var(format!("p{i}"));
    }
    for i in 0..cs.k_pairs {
        prog.add_var(format!("q{i}"));
    }
    for i in 0..cs.k_pairs {
        prog.add_var(format!("s{i}"));
    }
    for i in 0..cs.k_pairs {
        prog.add_var(format!("r{i}"));
    }
    for i in 0..cs.k_pairs {
        for k in 0..cs.k_pairs {
            prog.add_var(format!("t[{i},{k}]"));
        }
    }
    for i in 0..cs.k_pairs {
        for k in 0..cs.k_pairs {
            prog.add_var(format!("u[{i},{k}]"));
        }
    }
    debug_assert_eq!(prog.n_vars(), layout.n_vars());

    for i in 0..cs.k_pairs {
        prog.set_objective(layout.x(i), 1.0);
        prog.set_objective(layout.y(i), -1.0);
        prog.set_objective(layout.p(i), -1.0);
        prog.set_objective(layout.q(i), 1.0);
    }

    // PSD blocks: real symmetric embedding of each W_k.
    for k in 0..cs.k_pairs {
        prog.add_psd_block(2 * cs.n_tx, layout.psd_entries(k));
    }

    // Norm epigraph marks.
    for i in 0..cs.k_pairs {
        let ah = cs.h_est[i].conjugate();
        let ag = cs.g_est[i].conjugate();
        for k in 0..cs.k_pairs {
            prog.add_second_order(LinExpr::var(layout.t(i, k)), layout.matvec_exprs(k, &ah));
            prog.add_second_order(LinExpr::var(layout.u(i, k)), layout.matvec_exprs(k, &ag));
        }
    }

    // Exponential epigraph marks s_i >= e^(x_i), r_i >= e^(q_i).
    for i in 0..cs.k_pairs {
        prog.add_exponential(
            LinExpr::var(layout.x(i)),
            LinExpr::constant(1.0),
            LinExpr::var(layout.s(i)),
        );
        prog.add_exponential(
            LinExpr::var(layout.q(i)),
            LinExpr::constant(1.0),
            LinExpr::var(layout.r(i)),
        );
    }

    // The four rate-constraint families.
    for i in 0..cs.k_pairs {
        let ah = cs.h_est[i].conjugate();
        let ag = cs.g_est[i].conjugate();

        let mut signal = LinExpr::constant(cs.sigma2[i]);
        let mut interf = LinExpr::constant(-cs.sigma2[i]);
        let mut leak_all = LinExpr::constant(-cs.varsigma2[i]);
        let mut leak_other = LinExpr::constant(cs.varsigma2[i]);
        for k in 0..cs.k_pairs {
            let qh = layout.quad_expr(k, &ah);
            let qg = layout.quad_expr(k, &ag);
            signal.add(&qh, 1.0);
            signal.push(layout.t(i, k), -2.0 * cs.eps);
            leak_all.add(&qg, -1.0);
            leak_all.push(layout.u(i, k), -2.0 * cs.eps);
            if k != i {
                interf.add(&qh, -1.0);
                interf.push(layout.t(i, k), -2.0 * cs.eps);
                leak_other.add(&qg, 1.0);
                leak_other.push(layout.u(i, k), -2.0 * cs.eps);
            }
        }
        // signal sum >= s_i
        signal.push(layout.s(i), -1.0);
        prog.add_nonneg(signal);
        // leak_other sum >= r_i
        leak_other.push(layout.r(i), -1.0);
        prog.add_nonneg(leak_other);
        // interference sum <= e^(ytilde)(y - ytilde + 1)
        let ey = y_tilde[i].exp();
        interf.push(layout.y(i), ey);
        interf.add_constant(ey * (1.0 - y_tilde[i]));
        prog.add_nonneg(interf);
        // leak_all sum <= e^(ptilde)(p - ptilde + 1)
        let ep = p_tilde[i].exp();
        leak_all.push(layout.p(i), ep);
        leak_all.add_constant(ep * (1.0 - p_tilde[i]));
        prog.add_nonneg(leak_all);
    }

    // Sum power: P - sum_k trace(W_k) >= 0.
    let mut power_expr = LinExpr::constant(power);
    for k in 0..cs.k_pairs {
        for p in 0..cs.n_tx {
            power_expr.push(layout.idx_a(k, p, p), -1.0);
        }
    }
    prog.add_nonneg(power_expr);

    ScaSubproblem {
        program: prog,
        y_tilde: y_tilde.to_vec(),
        p_tilde: p_tilde.to_vec(),
        layout,
    }
}

/// Scalar surrogates read back from a solved subproblem.
#[derive(Debug, Clone)]
pub struct ScaPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl ScaPoint {
    /// Objective in nats: `sum_i (x_i - y_i - p_i + q_i)`.
    pub fn objective_nats(&self) -> f64 {
        self.x.iter().sum::<f64>() - self.y.iter().sum::<f64>() - self.p.iter().sum::<f64>()
            + self.q.iter().sum::<f64>()
    }
}

const EXTRACTION_RESIDUAL_LIMIT: f64 = 1e-6;

/// Read covariances and surrogates out of an optimal solve: the inverse
/// embedding is applied, each matrix Hermitianized, and tiny negative
/// eigenvalues floored to zero.
pub fn extract_covariances(
    sub: &ScaSubproblem,
    result: &SolverResult,
    cs: &ChannelSet,
) -> Result<(CovarianceSet, ScaPoint), ConicError> {
    if result.status != SolveStatus::Optimal {
        return Err(ConicError::ExtractionFailure(format!(
            "solver status {:?} is not optimal",
            result.status
        )));
    }
    if result.max_cone_residual > EXTRACTION_RESIDUAL_LIMIT {
        return Err(ConicError::ExtractionFailure(format!(
            "cone residual {} exceeds {}",
            result.max_cone_residual, EXTRACTION_RESIDUAL_LIMIT
        )));
    }
    let l = &sub.layout;
    assert_eq!(l.k, cs.k_pairs, "subproblem and channel set disagree on K");
    let z = &result.primal;

    let mut mats = Vec::with_capacity(l.k);
    for k in 0..l.k {
        let raw = sub.read_w(z, k);
        let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        let mut eig = herm.symmetric_eigen();
        for v in eig.eigenvalues.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        mats.push(eig.recompose());
    }
    let point = ScaPoint {
        x: (0..l.k).map(|i| z[l.x(i)]).collect(),
        y: (0..l.k).map(|i| z[l.y(i)]).collect(),
        p: (0..l.k).map(|i| z[l.p(i)]).collect(),
        q: (0..l.k).map(|i| z[l.q(i)]).collect(),
    };
    Ok((CovarianceSet::new(mats), point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_set, RngStream};
    use crate::conic::solve::{solve, DEFAULT_TOL};
    use crate::conic::ConeConstraint;

    fn basis_channels(n: usize) -> Vec<DVector<Complex64>> {
        (0..n)
            .map(|i| {
                DVector::from_fn(n, |r, _| {
                    if r == i {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect()
    }

    #[test]
    fn structural_counts_minimal_instance() {
        let e = basis_channels(1);
        let cs = ChannelSet::new(
            1,
            1,
            vec![e[0].clone()],
            vec![e[0].clone()],
            0.1,
            vec![1.0],
            vec![1.0],
        )
        .unwrap();
        let sub = build_sca_subproblem(&cs, 1.0, &[0.0], &[0.0]);
        let audit = sub.audit();
        assert_eq!(audit, ScaSubproblem::expected_size(1, 1));
        // 1 PSD block of dimension 2, 2 SOC, 2 EXP.
        assert_eq!(audit.psd_blocks, 1);
        assert_eq!(audit.soc_cones, 2);
        assert_eq!(audit.exp_cones, 2);
        let psd_dim = sub
            .program
            .constraints()
            .iter()
            .find_map(|c| match c {
                ConeConstraint::PsdBlock { dim, .. } => Some(*dim),
                _ => None,
            })
            .unwrap();
        assert_eq!(psd_dim, 2);
    }

    #[test]
    fn structural_counts_general() {
        let mut rng = RngStream::new(83, 0);
        for (n, k) in [(2, 1), (4, 2), (8, 4)] {
            let cs = sample_channel_set(n, k, 0.1, vec![1.0; k], vec![1.0; k], &mut rng).unwrap();
            let sub = build_sca_subproblem(&cs, 5.0, &vec![0.0; k], &vec![0.0; k]);
            assert_eq!(sub.audit(), ScaSubproblem::expected_size(n, k));
        }
    }

    #[test]
    fn zero_eps_decouples_norm_marks() {
        let mut rng = RngStream::new(89, 0);
        let cs = sample_channel_set(3, 2, 0.0, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
        let sub = build_sca_subproblem(&cs, 2.0, &[0.0, 0.0], &[0.0, 0.0]);
        let l = &sub.layout;
        let mark_vars: Vec<usize> = (0..2)
            .flat_map(|i| (0..2).flat_map(move |k| [l.t(i, k), l.u(i, k)]))
            .collect();
        for c in sub.program.constraints() {
            if let ConeConstraint::Nonnegative(e) = c {
                for &(v, coeff) in &e.terms {
                    if mark_vars.contains(&v) {
                        assert_eq!(coeff, 0.0, "eps=0 must zero out mark {v} in linear rows");
                    }
                }
            }
        }
    }

    #[test]
    fn separable_instance_matches_brute_force() {
        // N_t = 2, K = 1, h = e1, g = e2, unit noises, P = 1, eps = 0,
        // linearization at 0: optimum is all power on e1 with objective ln 2.
        let e = basis_channels(2);
        let cs = ChannelSet::new(
            2,
            1,
            vec![e[0].clone()],
            vec![e[1].clone()],
            0.0,
            vec![1.0],
            vec![1.0],
        )
        .unwrap();
        let sub = build_sca_subproblem(&cs, 1.0, &[0.0], &[0.0]);
        let res = solve(&sub.program, DEFAULT_TOL);
        assert_eq!(res.status, SolveStatus::Optimal);

        // Brute force over the power split and beam angle: for
        // w = sqrt(pw) (cos th, sin th), the subproblem value at the
        // linearization point is ln(1 + pw cos^2) - pw sin^2.
        let mut best = f64::NEG_INFINITY;
        for ti in 0..=400 {
            let th = std::f64::consts::FRAC_PI_2 * ti as f64 / 400.0;
            for pi in 0..=400 {
                let pw = pi as f64 / 400.0;
                let w11 = pw * th.cos().powi(2);
                let w22 = pw * th.sin().powi(2);
                let val = (1.0 + w11).ln() - w22;
                best = best.max(val);
            }
        }
        assert!(
            (best - 2f64.ln()).abs() < 1e-9,
            "grid oracle should find ln 2"
        );
        assert!(
            (res.objective_value - best).abs() < 1e-5,
            "solver {} vs brute force {best}",
            res.objective_value
        );

        let (cov, point) = extract_covariances(&sub, &res, &cs).unwrap();
        assert!((point.x[0] - 2f64.ln()).abs() < 1e-4);
        assert!(point.q[0].abs() < 1e-4);
        assert!((cov.mats[0][(0, 0)].re - 1.0).abs() < 1e-4);
        assert!(cov.mats[0][(1, 1)].re.abs() < 1e-4);
    }

    #[test]
    fn encoded_point_extracts_exactly() {
        let mut rng = RngStream::new(97, 0);
        let cs = sample_channel_set(3, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
        let sub = build_sca_subproblem(&cs, 4.0, &[0.1, 0.2], &[0.3, 0.4]);
        let w0 = rng.complex_gaussian_vector(3);
        let w1 = rng.complex_gaussian_vector(3);
        let mats = vec![&w0 * w0.adjoint(), &w1 * w1.adjoint()];
        let z = sub.encode_point(&mats);
        let fake = SolverResult {
            status: SolveStatus::Optimal,
            primal: z,
            objective_value: 0.0,
            max_cone_residual: 0.0,
            iterations: 0,
        };
        let (cov, _) = extract_covariances(&sub, &fake, &cs).unwrap();
        for (a, b) in cov.mats.iter().zip(mats.iter()) {
            assert!(
                (a - b).norm() < 1e-10,
                "round trip deviation {}",
                (a - b).norm()
            );
        }
    }

    #[test]
    fn solved_instance_extraction_contracts() {
        let mut rng = RngStream::new(101, 0);
        let p = 5.0;
        let cs = sample_channel_set(3, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
        // Linearize at the no-signal point, like the first SCA iteration.
        let y0: Vec<f64> = cs.sigma2.iter().map(|s| s.ln()).collect();
        let p0: Vec<f64> = (0..2).map(|i| cs.varsigma2[i].ln()).collect();
        let sub = build_sca_subproblem(&cs, p, &y0, &p0);
        let res = solve(&sub.program, DEFAULT_TOL);
        assert_eq!(res.status, SolveStatus::Optimal);
        let (cov, _) = extract_covariances(&sub, &res, &cs).unwrap();
        assert!(cov.total_trace() <= p + 1e-6, "power cone respected");

        // Flooring must be a tiny correction on a solver-optimal point.
        let raw0 = sub.read_w(&res.primal, 0);
        assert!((&cov.mats[0] - &raw0).norm() <= 1e-7);

        // Constraint families hold with equality at the optimum.
        let act = sub.activation_residuals(&cs, &res);
        for (fam, r) in act.iter().enumerate() {
            assert!(*r < 1e-5, "family {fam} activation residual {r}");
        }
        // Norm marks are tight.
        assert!(sub.mark_slack(&cs, &res) < 1e-5);
    }

    #[test]
    fn objective_invariant_under_user_relabeling() {
        let mut rng = RngStream::new(103, 0);
        let cs = sample_channel_set(4, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
        let swapped = ChannelSet::new(
            4,
            2,
            vec![cs.h_est[1].clone(), cs.h_est[0].clone()],
            vec![cs.g_est[1].clone(), cs.g_est[0].clone()],
            cs.eps,
            vec![cs.sigma2[1], cs.sigma2[0]],
            vec![cs.varsigma2[1], cs.varsigma2[0]],
        )
        .unwrap();
        let tilde: Vec<f64> = cs.sigma2.iter().map(|s| s.ln()).collect();
        let a = solve(
            &build_sca_subproblem(&cs, 3.0, &tilde, &tilde).program,
            DEFAULT_TOL,
        );
        let b = solve(
            &build_sca_subproblem(&swapped, 3.0, &tilde, &tilde).program,
            DEFAULT_TOL,
        );
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!(
            (a.objective_value - b.objective_value).abs() < 1e-6,
            "permutation changed the objective: {} vs {}",
            a.objective_value,
            b.objective_value
        );
    }
}
