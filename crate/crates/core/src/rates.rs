//! Exact per-link rates, the exact SSR, the worst-case quadratic-form bounds,
//! and the lower-bound SSR objective that all three designs optimize.
//!
//! Rates are in bits (log base 2) throughout. The lower bound replaces every
//! `|h^T w|^2` by its Cauchy-Schwarz extreme over the estimation-error ball
//! (second-order error term omitted): numerators of user terms take the lower
//! extreme, denominators the upper, and vice versa for eavesdropper terms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ChannelSet;

/// K beamforming vectors under a sum-power budget.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    pub w: Vec<DVector<Complex64>>,
    pub power_budget: f64,
}

impl BeamformerSet {
    /// Panics if the total power exceeds the budget beyond slack `1e-9 * P`.
    pub fn new(w: Vec<DVector<Complex64>>, power_budget: f64) -> Self {
        let total: f64 = w.iter().map(|v| v.norm_squared()).sum();
        assert!(
            total <= power_budget * (1.0 + 1e-9),
            "sum power {total} exceeds budget {power_budget}"
        );
        Self { w, power_budget }
    }

    pub fn total_power(&self) -> f64 {
        self.w.iter().map(|v| v.norm_squared()).sum()
    }
}

/// K Hermitian PSD covariance matrices (the relaxed beamforming variables).
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    pub mats: Vec<DMatrix<Complex64>>,
}

impl CovarianceSet {
    /// Panics if any matrix is not Hermitian to 1e-10.
    pub fn new(mats: Vec<DMatrix<Complex64>>) -> Self {
        for m in &mats {
            assert!(m.is_square(), "covariance must be square");
            let dev = (m - m.adjoint()).norm();
            assert!(
                dev <= 1e-10 * (1.0 + m.norm()),
                "covariance not Hermitian: deviation {dev}"
            );
        }
        Self { mats }
    }

    pub fn total_trace(&self) -> f64 {
        self.mats.iter().map(|m| m.trace().re).sum()
    }

    /// Rank-one covariances from a beamformer set.
    pub fn from_beamformers(bf: &BeamformerSet) -> Self {
        let mats = bf.w.iter().map(|w| w * w.adjoint()).collect();
        Self { mats }
    }

    /// Check PSD-ness (min eigenvalue >= -1e-8) and a trace budget.
    pub fn validate(&self, power_budget: f64) -> bool {
        let psd = self.mats.iter().all(|m| {
            m.clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .all(|&l| l >= -1e-8)
        });
        psd && self.total_trace() <= power_budget + 1e-8
    }
}

/// `log2(1 + |h^T w_i|^2 / (sum_{k != i} |h^T w_k|^2 + noise))`.
pub fn user_rate_exact(
    h_i: &DVector<Complex64>,
    sigma2_i: f64,
    bf: &BeamformerSet,
    i: usize,
) -> f64 {
    sinr_rate(h_i, sigma2_i, &bf.w, i)
}

/// Mirror of [`user_rate_exact`] with the eavesdropper channel and noise.
pub fn eaves_rate_exact(
    g_i: &DVector<Complex64>,
    varsigma2_i: f64,
    bf: &BeamformerSet,
    i: usize,
) -> f64 {
    sinr_rate(g_i, varsigma2_i, &bf.w, i)
}

fn sinr_rate(ch: &DVector<Complex64>, noise: f64, w: &[DVector<Complex64>], i: usize) -> f64 {
    let gain = |v: &DVector<Complex64>| ch.dot(v).norm_sqr();
    let signal = gain(&w[i]);
    let interference: f64 = w
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, v)| gain(v))
        .sum();
    (1.0 + signal / (interference + noise)).log2()
}

/// Exact sum secrecy rate `sum_i (user rate - eavesdropper rate)` on the given
/// channels. No per-pair clamping: the sum may be negative.
pub fn ssr_exact(
    h: &[DVector<Complex64>],
    g: &[DVector<Complex64>],
    sigma2: &[f64],
    varsigma2: &[f64],
    bf: &BeamformerSet,
) -> f64 {
    (0..bf.w.len())
        .map(|i| sinr_rate(&h[i], sigma2[i], &bf.w, i) - sinr_rate(&g[i], varsigma2[i], &bf.w, i))
        .sum()
}

/// SSR with each pair's contribution clamped at zero, `sum_i (r_i - s_i)^+`.
pub fn ssr_exact_clamped(
    h: &[DVector<Complex64>],
    g: &[DVector<Complex64>],
    sigma2: &[f64],
    varsigma2: &[f64],
    bf: &BeamformerSet,
) -> f64 {
    (0..bf.w.len())
        .map(|i| {
            (sinr_rate(&h[i], sigma2[i], &bf.w, i) - sinr_rate(&g[i], varsigma2[i], &bf.w, i))
                .max(0.0)
        })
        .sum()
}

/// `hbar^T W hbar*` and `||W hbar*||` for Hermitian `W`.
pub(crate) fn quad_and_norm(hbar: &DVector<Complex64>, w: &DMatrix<Complex64>) -> (f64, f64) {
    let a = hbar.conjugate();
    let wa = w * &a;
    (a.dotc(&wa).re, wa.norm())
}

/// First-order extreme values of `|h^T w|^2` over the error ball:
/// `(quad - 2 eps ||W hbar*||, quad + 2 eps ||W hbar*||)`.
pub fn quad_bounds(hbar: &DVector<Complex64>, w: &DMatrix<Complex64>, eps: f64) -> (f64, f64) {
    let (quad, norm) = quad_and_norm(hbar, w);
    (quad - 2.0 * eps * norm, quad + 2.0 * eps * norm)
}

/// Lower-bound SSR value plus a flag recording whether any bound degenerated
/// (required clamping) during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundSsr {
    pub bits: f64,
    pub degenerate: bool,
}

const LOG_ARG_FLOOR: f64 = 1e-12;

/// Lower-bound SSR of a beamformer set (rank-one covariances evaluated
/// directly, without forming matrices).
pub fn ssr_lower_bound(cs: &ChannelSet, bf: &BeamformerSet) -> LowerBoundSsr {
    // For W = w w^H: hbar^T W hbar* = |hbar^T w|^2 and
    // ||W hbar*|| = |hbar^T w| * ||w||.
    let bound = |ch: &DVector<Complex64>, w: &DVector<Complex64>| {
        let amp = ch.dot(w).norm();
        let quad = amp * amp;
        let spread = 2.0 * cs.eps * amp * w.norm();
        (quad - spread, quad + spread)
    };
    lower_bound_impl(
        cs,
        |i, k| bound(&cs.h_est[i], &bf.w[k]),
        |i, k| bound(&cs.g_est[i], &bf.w[k]),
    )
}

/// Lower-bound SSR of a covariance set (the relaxed variables).
pub fn ssr_lower_bound_cov(cs: &ChannelSet, cov: &CovarianceSet) -> LowerBoundSsr {
    lower_bound_impl(
        cs,
        |i, k| quad_bounds(&cs.h_est[i], &cov.mats[k], cs.eps),
        |i, k| quad_bounds(&cs.g_est[i], &cov.mats[k], cs.eps),
    )
}

fn lower_bound_impl(
    cs: &ChannelSet,
    h_bounds: impl Fn(usize, usize) -> (f64, f64),
    g_bounds: impl Fn(usize, usize) -> (f64, f64),
) -> LowerBoundSsr {
    let k_pairs = cs.k_pairs;
    let mut bits = 0.0;
    let mut degenerate = false;
    // Values between -1e-12 and 0 are rounding noise, not degenerate bounds.
    let mut notice = |clamped: bool| degenerate |= clamped;

    for i in 0..k_pairs {
        let mut num_u = cs.sigma2[i];
        let mut den_u = cs.sigma2[i];
        let mut num_e = cs.varsigma2[i];
        let mut den_e = cs.varsigma2[i];
        for k in 0..k_pairs {
            let (lb_h, ub_h) = h_bounds(i, k);
            let (lb_g, ub_g) = g_bounds(i, k);
            // User term: lower bounds of every |h^T w_k|^2 in the numerator
            // (clamped at zero; a squared magnitude is never negative),
            // upper bounds of the interference in the denominator.
            notice(lb_h < -LOG_ARG_FLOOR);
            num_u += lb_h.max(0.0);
            if k != i {
                den_u += ub_h;
            }
            // Eavesdropper term mirrored: upper bounds in the numerator,
            // lower bounds of the interference in the denominator.
            num_e += ub_g;
            if k != i {
                den_e += lb_g;
            }
        }
        let mut arg_u = num_u / den_u;
        if arg_u < LOG_ARG_FLOOR {
            arg_u = LOG_ARG_FLOOR;
            notice(true);
        }
        if den_e < LOG_ARG_FLOOR {
            den_e = LOG_ARG_FLOOR;
            notice(true);
        }
        let mut arg_e = num_e / den_e;
        if arg_e < LOG_ARG_FLOOR {
            arg_e = LOG_ARG_FLOOR;
            notice(true);
        }
        bits += arg_u.log2() - arg_e.log2();
    }
    LowerBoundSsr { bits, degenerate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_set, sample_true_instance, RngStream};

    fn e(n: usize, i: usize) -> DVector<Complex64> {
        DVector::from_fn(n, |r, _| {
            if r == i {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Straight-line re-implementation of the SINR rate used as an
    /// independent oracle for the hand examples.
    fn rate_oracle(ch: &[Complex64], ws: &[Vec<Complex64>], own: usize, noise: f64) -> f64 {
        let amp2 = |w: &Vec<Complex64>| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in ch.iter().zip(w.iter()) {
                acc += a * b;
            }
            acc.norm_sqr()
        };
        let mut interf = 0.0;
        for (k, w) in ws.iter().enumerate() {
            if k != own {
                interf += amp2(w);
            }
        }
        (1.0 + amp2(&ws[own]) / (interf + noise)).log2()
    }

    #[test]
    fn single_user_no_interference() {
        let bf = BeamformerSet::new(vec![e(2, 0)], 1.0);
        let r = user_rate_exact(&e(2, 0), 1.0, &bf, 0);
        assert!((r - 1.0).abs() < 1e-12, "log2(2) expected, got {r}");
    }

    #[test]
    fn zero_beamformer_zero_rate() {
        let bf = BeamformerSet::new(vec![DVector::zeros(2)], 1.0);
        assert_eq!(user_rate_exact(&e(2, 0), 1.0, &bf, 0), 0.0);
    }

    #[test]
    fn interference_limited_rate() {
        // h_1 = e1, w_1 = w_2 = e1, sigma^2 = 1 -> log2(1 + 1/2).
        let bf = BeamformerSet::new(vec![e(2, 0), e(2, 0)], 2.0);
        let r = user_rate_exact(&e(2, 0), 1.0, &bf, 0);
        let oracle = rate_oracle(
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            &[
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            ],
            0,
            1.0,
        );
        assert!((r - 1.5f64.log2()).abs() < 1e-12);
        assert!((r - oracle).abs() < 1e-12);
    }

    #[test]
    fn nulled_eavesdropper() {
        let bf = BeamformerSet::new(vec![e(2, 0)], 1.0);
        assert_eq!(eaves_rate_exact(&e(2, 1), 1.0, &bf, 0), 0.0);
    }

    #[test]
    fn eaves_rate_hand_example() {
        let bf = BeamformerSet::new(vec![e(2, 0)], 1.0);
        let s = eaves_rate_exact(&e(2, 0), 2.0, &bf, 0);
        assert!((s - 1.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn ssr_zero_cases() {
        let zero_bf = BeamformerSet::new(vec![DVector::zeros(2), DVector::zeros(2)], 1.0);
        let h = [e(2, 0), e(2, 1)];
        let g = [e(2, 1), e(2, 0)];
        assert_eq!(ssr_exact(&h, &g, &[1.0, 1.0], &[1.0, 1.0], &zero_bf), 0.0);

        // Symmetric wiretap: g_i = h_i and equal noises -> SSR = 0 always.
        let mut rng = RngStream::new(17, 0);
        let w: Vec<_> = (0..2).map(|_| rng.complex_gaussian_vector(2)).collect();
        let p: f64 = w.iter().map(|v| v.norm_squared()).sum();
        let bf = BeamformerSet::new(w, p);
        let ssr = ssr_exact(&h, &h, &[1.0, 0.5], &[1.0, 0.5], &bf);
        assert!(ssr.abs() < 1e-12);
    }

    #[test]
    fn ssr_phase_rotation_invariant() {
        let mut rng = RngStream::new(23, 0);
        let h: Vec<_> = (0..2).map(|_| rng.complex_gaussian_vector(3)).collect();
        let g: Vec<_> = (0..2).map(|_| rng.complex_gaussian_vector(3)).collect();
        let w: Vec<_> = (0..2).map(|_| rng.complex_gaussian_vector(3)).collect();
        let p: f64 = w.iter().map(|v| v.norm_squared()).sum();
        let bf = BeamformerSet::new(w.clone(), p);
        let phase = Complex64::from_polar(1.0, 1.234);
        let rotated = BeamformerSet::new(vec![w[0].clone() * phase, w[1].clone()], p);
        let a = ssr_exact(&h, &g, &[1.0, 1.0], &[1.0, 1.0], &bf);
        let b = ssr_exact(&h, &g, &[1.0, 1.0], &[1.0, 1.0], &rotated);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn quad_bounds_collapse_at_zero_eps() {
        let mut rng = RngStream::new(31, 0);
        let h = rng.complex_gaussian_vector(3);
        let w = rng.complex_gaussian_vector(3);
        let cov = &w * w.adjoint();
        let (lb, ub) = quad_bounds(&h, &cov, 0.0);
        assert!((lb - ub).abs() < 1e-14);
        assert!((lb - h.dot(&w).norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn quad_bounds_zero_matrix() {
        let h = e(2, 0);
        let (lb, ub) = quad_bounds(&h, &DMatrix::zeros(2, 2), 0.3);
        assert_eq!((lb, ub), (0.0, 0.0));
    }

    #[test]
    fn quad_bounds_rank_one_example_with_sampling_oracle() {
        // hbar = e1, W = e1 e1^H, eps = 0.1 -> bounds (0.8, 1.2).
        // True extremes of |(hbar+d)^T e1|^2 are (1 -+ eps)^2 = 0.81 / 1.21:
        // within eps^2 of the first-order bounds.
        let h = e(2, 0);
        let w1 = e(2, 0);
        let cov = &w1 * w1.adjoint();
        let eps = 0.1;
        let (lb, ub) = quad_bounds(&h, &cov, eps);
        assert!((lb - 0.8).abs() < 1e-12 && (ub - 1.2).abs() < 1e-12);

        let mut rng = RngStream::new(37, 0);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..1_000_000 {
            let d = rng.complex_ball(2, eps);
            let v = (&h + &d).dot(&w1).norm_sqr();
            assert!(v >= lb - eps * eps - 1e-12 && v <= ub + eps * eps + 1e-12);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(
            lo < lb + eps * eps + 5e-3,
            "sampled min {lo} should approach lb {lb}"
        );
        assert!(
            hi > ub - eps * eps - 5e-3,
            "sampled max {hi} should approach ub {ub}"
        );
    }

    #[test]
    fn quad_bounds_monotone_in_eps() {
        let mut rng = RngStream::new(41, 0);
        for _ in 0..50 {
            let h = rng.complex_gaussian_vector(4);
            let w = rng.complex_gaussian_vector(4);
            let cov = &w * w.adjoint();
            let mut prev = quad_bounds(&h, &cov, 0.0);
            for step in 1..5 {
                let cur = quad_bounds(&h, &cov, 0.1 * step as f64);
                assert!(cur.0 <= prev.0 + 1e-12 && cur.1 >= prev.1 - 1e-12);
                assert!(cur.0 <= cur.1);
                prev = cur;
            }
        }
    }

    fn random_feasible_bf(rng: &mut RngStream, n: usize, k: usize, p: f64) -> BeamformerSet {
        let mut w: Vec<_> = (0..k).map(|_| rng.complex_gaussian_vector(n)).collect();
        let total: f64 = w.iter().map(|v| v.norm_squared()).sum();
        let scale = Complex64::new((p / total).sqrt(), 0.0);
        for v in &mut w {
            *v *= scale;
        }
        BeamformerSet::new(w, p)
    }

    #[test]
    fn lower_bound_collapses_to_exact_at_zero_eps() {
        let mut rng = RngStream::new(43, 0);
        for trial in 0..50 {
            let (n, k) = match trial % 3 {
                0 => (2, 1),
                1 => (4, 2),
                _ => (8, 4),
            };
            let cs = sample_channel_set(n, k, 0.0, vec![1.0; k], vec![1.0; k], &mut rng).unwrap();
            let bf = random_feasible_bf(&mut rng, n, k, 10.0);
            let lb = ssr_lower_bound(&cs, &bf);
            let exact = ssr_exact(&cs.h_est, &cs.g_est, &cs.sigma2, &cs.varsigma2, &bf);
            assert!(
                (lb.bits - exact).abs() < 1e-9,
                "eps=0 collapse failed: lb {} vs exact {exact}",
                lb.bits
            );
            assert!(!lb.degenerate);
        }
    }

    #[test]
    fn lower_bound_zero_covariances() {
        let mut rng = RngStream::new(47, 0);
        let cs = sample_channel_set(4, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
        let cov = CovarianceSet::new(vec![DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)]);
        let lb = ssr_lower_bound_cov(&cs, &cov);
        assert_eq!(lb.bits, 0.0);
    }

    #[test]
    fn beamformer_and_covariance_overloads_agree() {
        let mut rng = RngStream::new(53, 0);
        for _ in 0..20 {
            let cs = sample_channel_set(4, 2, 0.07, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
            let bf = random_feasible_bf(&mut rng, 4, 2, 5.0);
            let cov = CovarianceSet::from_beamformers(&bf);
            let a = ssr_lower_bound(&cs, &bf).bits;
            let b = ssr_lower_bound_cov(&cs, &cov).bits;
            assert!((a - b).abs() < 1e-12, "overloads disagree: {a} vs {b}");
        }
    }

    #[test]
    fn lower_bound_sampling_oracle_with_second_order_slack() {
        // min over sampled in-ball channels of the exact SSR must stay above
        // the lower bound minus the explicit second-order slack
        // 4 K eps^2 max_k ||w_k||^2 log2(e) / min noise.
        let n = 4;
        let k = 2;
        let eps = 0.05;
        let p = 10.0_f64; // SNR 10 dB with unit noise
        let mut rng = RngStream::new(59, 0);
        let cs = sample_channel_set(n, k, eps, vec![1.0; k], vec![1.0; k], &mut rng).unwrap();
        let bf = random_feasible_bf(&mut rng, n, k, p);
        let lb = ssr_lower_bound(&cs, &bf).bits;

        let max_w2 = bf.w.iter().map(|w| w.norm_squared()).fold(0.0, f64::max);
        let slack = 4.0 * k as f64 * eps * eps * max_w2 * std::f64::consts::LOG2_E / 1.0;

        let mut min_exact = f64::INFINITY;
        for _ in 0..10_000 {
            let inst = sample_true_instance(&cs, &mut rng);
            let v = ssr_exact(&inst.h_true, &inst.g_true, &cs.sigma2, &cs.varsigma2, &bf);
            min_exact = min_exact.min(v);
        }
        assert!(
            min_exact >= lb - slack,
            "sampled exact SSR {min_exact} fell below lower bound {lb} minus slack {slack}"
        );
    }

    #[test]
    fn clamped_ssr_never_below_signed() {
        let mut rng = RngStream::new(61, 0);
        for _ in 0..20 {
            let h: Vec<_> = (0..2).map(|_| rng.complex_gaussian_vector(2)).collect();
            let g: Vec<_> = (0..2).map(|_| rng.complex_gaussian_vector(2)).collect();
            let bf = random_feasible_bf(&mut rng, 2, 2, 4.0);
            let raw = ssr_exact(&h, &g, &[1.0, 1.0], &[1.0, 1.0], &bf);
            let pos = ssr_exact_clamped(&h, &g, &[1.0, 1.0], &[1.0, 1.0], &bf);
            assert!(pos >= raw - 1e-15 && pos >= -1e-15);
        }
    }
}
