//! Successive convex approximation over the semidefinite relaxation.
//!
//! Each iteration linearizes the exponential interference/leakage terms at
//! the previous covariances, solves the resulting conic subproblem, and
//! refreshes the linearization point. The objective sequence is
//! nondecreasing and bounded, so the iteration converges; a stopping rule
//! on the objective increment ends it early. Rank-one beamformers are
//! recovered from the relaxed covariances by Gaussian randomization.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{ChannelSet, RngStream};
use crate::conic::solve::{solve, DEFAULT_TOL};
use crate::conic::{build_sca_subproblem, extract_covariances, ScaPoint};
use crate::rates::{ssr_lower_bound, ssr_lower_bound_cov, BeamformerSet, CovarianceSet};

/// Tuning knobs of the iteration.
#[derive(Debug, Clone)]
pub struct ScaConfig {
    /// Hard cap on subproblem solves.
    pub max_iter: usize,
    /// Stop when the objective improves by less than this many bits.
    pub obj_tol: f64,
    /// Random initial points tried before reporting failure.
    pub init_attempts: usize,
    /// Gaussian randomization candidates for rank-one recovery.
    pub randomization_samples: usize,
    /// Reject initial points whose first solution has any nonpositive
    /// surrogate. Off by default: with sub-unit noise variances a negative
    /// `x = ln(...)` is legitimate, so plain solver feasibility is the
    /// saner acceptance rule.
    pub strict_sign_check: bool,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            obj_tol: 1e-4,
            init_attempts: 20,
            randomization_samples: 200,
            strict_sign_check: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScaError {
    #[error("initialization failed after {attempts} attempts")]
    InitializationFailure { attempts: usize },
}

/// State after `iter` subproblem solves. `y_tilde`/`p_tilde` are the
/// linearization points for the *next* solve; `point` holds the surrogates
/// of the last one.
#[derive(Debug, Clone)]
pub struct ScaState {
    pub iter: usize,
    pub y_tilde: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub w_hat: CovarianceSet,
    pub point: ScaPoint,
    /// Solver objective per iteration, in bits.
    pub objective_trace: Vec<f64>,
    /// Worst cone residual per iteration.
    pub residual_trace: Vec<f64>,
}

/// A failed step hands the last good state back to the caller.
#[derive(Debug)]
pub struct ScaStepError {
    pub last_good: ScaState,
    pub detail: String,
}

/// Linearization update: `y_tilde_i = ln(interference upper bound at W)`,
/// `p_tilde_i = ln(leakage upper bound at W)`.
pub fn update_tilde(w_hat: &CovarianceSet, cs: &ChannelSet) -> (Vec<f64>, Vec<f64>) {
    let mut y = Vec::with_capacity(cs.k_pairs);
    let mut p = Vec::with_capacity(cs.k_pairs);
    for i in 0..cs.k_pairs {
        let mut interf = cs.sigma2[i];
        let mut leak = cs.varsigma2[i];
        for k in 0..cs.k_pairs {
            let (qh, nh) = crate::rates::quad_and_norm(&cs.h_est[i], &w_hat.mats[k]);
            let (qg, ng) = crate::rates::quad_and_norm(&cs.g_est[i], &w_hat.mats[k]);
            if k != i {
                interf += qh + 2.0 * cs.eps * nh;
            }
            leak += qg + 2.0 * cs.eps * ng;
        }
        y.push(interf.ln());
        p.push(leak.ln());
    }
    (y, p)
}

fn solve_at(
    cs: &ChannelSet,
    power: f64,
    y_tilde: &[f64],
    p_tilde: &[f64],
) -> Result<(CovarianceSet, ScaPoint, f64), String> {
    let sub = build_sca_subproblem(cs, power, y_tilde, p_tilde);
    let res = solve(&sub.program, DEFAULT_TOL);
    let residual = res.max_cone_residual;
    let (w, point) = extract_covariances(&sub, &res, cs).map_err(|e| format!("subproblem: {e}"))?;
    Ok((w, point, residual))
}

/// One initialization attempt from a given beamformer point: linearize at
/// its rank-one covariances and solve the first subproblem. `None` when the
/// solve fails or the point flunks the sign test.
pub fn init_state_with(
    cs: &ChannelSet,
    power: f64,
    w0: &[DVector<Complex64>],
    cfg: &ScaConfig,
) -> Option<ScaState> {
    let w0_cov = CovarianceSet::new(w0.iter().map(|w| w * w.adjoint()).collect());
    let (y1, p1) = update_tilde(&w0_cov, cs);
    let (w_hat, point, residual) = solve_at(cs, power, &y1, &p1).ok()?;
    if cfg.strict_sign_check {
        let all_positive = point
            .x
            .iter()
            .chain(&point.y)
            .chain(&point.p)
            .chain(&point.q)
            .all(|&v| v > 0.0);
        if !all_positive {
            return None;
        }
    }
    let obj_bits = point.objective_nats() * std::f64::consts::LOG2_E;
    let (y_next, p_next) = update_tilde(&w_hat, cs);
    Some(ScaState {
        iter: 1,
        y_tilde: y_next,
        p_tilde: p_next,
        w_hat,
        point,
        objective_trace: vec![obj_bits],
        residual_trace: vec![residual],
    })
}

/// Draw a random full-power initial point, solve the first subproblem, and
/// accept it if the solver succeeds (plus the sign test when
/// `strict_sign_check` is on). Retries up to `cfg.init_attempts` times.
pub fn init_state(
    cs: &ChannelSet,
    power: f64,
    cfg: &ScaConfig,
    rng: &mut RngStream,
) -> Result<ScaState, ScaError> {
    for _ in 0..cfg.init_attempts {
        let mut w0: Vec<DVector<Complex64>> = (0..cs.k_pairs)
            .map(|_| rng.complex_gaussian_vector(cs.n_tx))
            .collect();
        let total: f64 = w0.iter().map(|v| v.norm_squared()).sum();
        let scale = Complex64::new((power / total).sqrt(), 0.0);
        for v in &mut w0 {
            *v *= scale;
        }
        if let Some(state) = init_state_with(cs, power, &w0, cfg) {
            return Ok(state);
        }
    }
    Err(ScaError::InitializationFailure {
        attempts: cfg.init_attempts,
    })
}

/// One iteration: solve at the stored linearization point, append the
/// objective, refresh the point.
pub fn sca_step(
    state: ScaState,
    cs: &ChannelSet,
    power: f64,
    _cfg: &ScaConfig,
) -> Result<ScaState, Box<ScaStepError>> {
    match solve_at(cs, power, &state.y_tilde, &state.p_tilde) {
        Ok((w_hat, point, residual)) => {
            let obj_bits = point.objective_nats() * std::f64::consts::LOG2_E;
            let (y_next, p_next) = update_tilde(&w_hat, cs);
            let mut objective_trace = state.objective_trace;
            objective_trace.push(obj_bits);
            let mut residual_trace = state.residual_trace;
            residual_trace.push(residual);
            Ok(ScaState {
                iter: state.iter + 1,
                y_tilde: y_next,
                p_tilde: p_next,
                w_hat,
                point,
                objective_trace,
                residual_trace,
            })
        }
        Err(detail) => Err(Box::new(ScaStepError {
            last_good: state,
            detail,
        })),
    }
}

/// Full run of the algorithm.
#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub covariances: CovarianceSet,
    /// Lower-bound SSR of the relaxed covariances, in bits.
    pub relaxed_value_bits: f64,
    pub beamformers: BeamformerSet,
    /// Lower-bound SSR of the recovered beamformers, in bits.
    pub beamformer_value_bits: f64,
    pub beamformer_degenerate: bool,
    /// Solver objective per iteration, bits.
    pub trace: Vec<f64>,
    /// Worst cone residual per iteration.
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Subproblem failures absorbed mid-run (iteration stopped early).
    pub solver_failures: usize,
}

impl ScaOutcome {
    /// Per-iteration trace as CSV rows `iter,objective_bits,max_constraint_residual`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,objective_bits,max_constraint_residual\n");
        for (i, (obj, res)) in self.trace.iter().zip(&self.residual_trace).enumerate() {
            out.push_str(&format!("{},{obj:.9e},{res:.3e}\n", i + 1));
        }
        out
    }
}

/// Iterate to convergence (or `max_iter`), then recover rank-one
/// beamformers by randomization.
pub fn run_sca(
    cs: &ChannelSet,
    power: f64,
    cfg: &ScaConfig,
    rng: &mut RngStream,
) -> Result<ScaOutcome, ScaError> {
    let mut state = init_state(cs, power, cfg, rng)?;
    let mut converged = false;
    let mut solver_failures = 0;
    while state.iter < cfg.max_iter {
        let n = state.objective_trace.len();
        if n >= 2
            && (state.objective_trace[n - 1] - state.objective_trace[n - 2]).abs() < cfg.obj_tol
        {
            converged = true;
            break;
        }
        match sca_step(state, cs, power, cfg) {
            Ok(next) => state = next,
            Err(e) => {
                state = e.last_good;
                solver_failures += 1;
                break;
            }
        }
    }
    if !converged {
        let n = state.objective_trace.len();
        converged = n >= 2
            && (state.objective_trace[n - 1] - state.objective_trace[n - 2]).abs() < cfg.obj_tol;
    }

    let beamformers = randomize_rank_one(&state.w_hat, cs, power, cfg.randomization_samples, rng);
    let lb = ssr_lower_bound(cs, &beamformers);
    Ok(ScaOutcome {
        relaxed_value_bits: ssr_lower_bound_cov(cs, &state.w_hat).bits,
        covariances: state.w_hat,
        beamformers,
        beamformer_value_bits: lb.bits,
        beamformer_degenerate: lb.degenerate,
        iterations: state.iter,
        trace: state.objective_trace,
        residual_trace: state.residual_trace,
        converged,
        solver_failures,
    })
}

const RANK_ONE_RATIO: f64 = 1e-6;

/// Rounding in the common rescale (or eigenvalue flooring in extraction)
/// can leave the total a few ulps past the budget; shave it back under.
fn trim_to_budget(w: &mut [DVector<Complex64>], power: f64) {
    for attempt in 0..4 {
        let total: f64 = w.iter().map(|v| v.norm_squared()).sum();
        if total <= power {
            return;
        }
        let margin = if attempt < 2 { 1.0 } else { 1.0 - 1e-12 };
        let shrink = Complex64::new((power / total).sqrt() * margin, 0.0);
        for v in w.iter_mut() {
            *v *= shrink;
        }
    }
}

/// Rank-one recovery. Exact eigendecomposition when every covariance is
/// numerically rank one; otherwise Gaussian randomization: `L` candidate
/// sets `w_i = W_i^(1/2) z_i` plus the all-dominant-eigenvector candidate,
/// each rescaled by a common factor onto the power budget, scored by their
/// lower-bound SSR.
pub fn randomize_rank_one(
    wset: &CovarianceSet,
    cs: &ChannelSet,
    power: f64,
    samples: usize,
    rng: &mut RngStream,
) -> BeamformerSet {
    struct Decomp {
        dominant: DVector<Complex64>,
        sqrt: nalgebra::DMatrix<Complex64>,
        rank_one: bool,
    }
    let decomps: Vec<Decomp> = wset
        .mats
        .iter()
        .map(|m| {
            let eig = m.clone().symmetric_eigen();
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
            let l1 = eig.eigenvalues[order[0]].max(0.0);
            let l2 = if order.len() > 1 {
                eig.eigenvalues[order[1]].max(0.0)
            } else {
                0.0
            };
            let dominant = eig.eigenvectors.column(order[0]) * Complex64::new(l1.sqrt(), 0.0);
            let mut sqrt_eig = eig.clone();
            for v in sqrt_eig.eigenvalues.iter_mut() {
                *v = v.max(0.0).sqrt();
            }
            let sqrt = sqrt_eig.recompose();
            let rank_one = l1 <= f64::MIN_POSITIVE || l2 / l1 <= RANK_ONE_RATIO;
            Decomp {
                dominant,
                sqrt,
                rank_one,
            }
        })
        .collect();

    if decomps.iter().all(|d| d.rank_one) {
        let mut w: Vec<_> = decomps.into_iter().map(|d| d.dominant).collect();
        trim_to_budget(&mut w, power);
        return BeamformerSet::new(w, power);
    }

    // Fix the whole draw sequence up front so candidate evaluation order
    // cannot change the result.
    let mut candidates: Vec<Vec<DVector<Complex64>>> = Vec::with_capacity(samples + 1);
    candidates.push(decomps.iter().map(|d| d.dominant.clone()).collect());
    for _ in 0..samples {
        let cand: Vec<DVector<Complex64>> = decomps
            .iter()
            .map(|d| &d.sqrt * rng.complex_gaussian_vector(cs.n_tx))
            .collect();
        candidates.push(cand);
    }

    let mut best: Option<(f64, Vec<DVector<Complex64>>)> = None;
    for mut cand in candidates {
        let total: f64 = cand.iter().map(|w| w.norm_squared()).sum();
        if total <= 0.0 {
            continue;
        }
        let scale = Complex64::new((power / total).sqrt(), 0.0);
        for w in &mut cand {
            *w *= scale;
        }
        trim_to_budget(&mut cand, power);
        let bf = BeamformerSet::new(cand, power);
        let value = ssr_lower_bound(cs, &bf).bits;
        match &best {
            Some((b, _)) if value <= *b => {}
            _ => best = Some((value, bf.w)),
        }
    }
    match best {
        Some((_, w)) => BeamformerSet::new(w, power),
        // All-zero covariances: return zero beamformers.
        None => BeamformerSet::new(
            (0..cs.k_pairs).map(|_| DVector::zeros(cs.n_tx)).collect(),
            power,
        ),
    }
}
