//! Channel data model, random generation, norm-bounded perturbation sampling,
//! and the Cauchy-Schwarz extremizers that underlie all worst-case bounds.
//!
//! The transmitter knows estimates `h_est[i]`, `g_est[i]` of the user and
//! eavesdropper channels; the true channels lie within a closed complex ball
//! of radius `eps` around the estimates. Everything downstream (the robust
//! rate bounds, the conic subproblems, the zero-forcing allocation) consumes
//! a [`ChannelSet`]. Monte Carlo evaluation of realized performance draws
//! [`TrueChannelInstance`]s uniformly from the uncertainty ball.
//!
//! All randomness flows through [`RngStream`], a counter-based (seed,
//! substream) ChaCha stream: identical `(seed, id)` yields identical draws
//! across runs and platforms, and distinct substreams are independent, so
//! trials can be generated in any order or in parallel.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Errors from channel construction and sampling.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid dimensions: n_tx = {n_tx} must be >= k_pairs = {k_pairs} >= 1")]
    InvalidDimension { n_tx: usize, k_pairs: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Deterministic counter-based random stream.
///
/// A `(seed, substream)` pair fully determines the draw sequence, so Monte
/// Carlo trials keyed by trial index are order-independent and safe to run
/// concurrently (one stream per thread).
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    substream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(substream);
        Self {
            seed,
            substream,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream_id(&self) -> u64 {
        self.substream
    }

    /// A fresh stream with the same seed and a different substream id.
    pub fn derive(&self, substream: u64) -> Self {
        Self::new(self.seed, substream)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// One standard normal via Box-Muller (platform-deterministic).
    pub fn standard_normal(&mut self) -> f64 {
        // 1 - u in (0, 1] keeps the log finite.
        let u = 1.0 - self.rng.gen::<f64>();
        let v = self.rng.gen::<f64>();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    /// Circularly-symmetric complex Gaussian CN(0, 1):
    /// real and imaginary parts each N(0, 1/2).
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(s * self.standard_normal(), s * self.standard_normal())
    }

    /// Complex vector with i.i.d. CN(0, 1) entries.
    pub fn complex_gaussian_vector(&mut self, len: usize) -> DVector<Complex64> {
        DVector::from_fn(len, |_, _| self.complex_gaussian())
    }

    /// Uniform draw from the closed complex ball of radius `radius` in C^len:
    /// direction uniform on the sphere, radius `r = radius * u^(1/(2*len))`.
    pub fn complex_ball(&mut self, len: usize, radius: f64) -> DVector<Complex64> {
        if radius == 0.0 || len == 0 {
            return DVector::zeros(len);
        }
        let mut dir = self.complex_gaussian_vector(len);
        let norm = dir.norm();
        if norm == 0.0 {
            return DVector::zeros(len);
        }
        let u = self.uniform();
        let r = radius * u.powf(1.0 / (2.0 * len as f64));
        dir *= Complex64::new(r / norm, 0.0);
        dir
    }
}

/// Estimated channels plus the uncertainty model: the inputs of every
/// robust design.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub n_tx: usize,
    pub k_pairs: usize,
    /// Estimated user channels, one length-`n_tx` vector per pair.
    pub h_est: Vec<DVector<Complex64>>,
    /// Estimated eavesdropper channels.
    pub g_est: Vec<DVector<Complex64>>,
    /// Shared norm bound on the estimation error of every channel.
    pub eps: f64,
    /// User noise variances.
    pub sigma2: Vec<f64>,
    /// Eavesdropper noise variances.
    pub varsigma2: Vec<f64>,
}

impl ChannelSet {
    /// Validating constructor; see the struct invariants.
    pub fn new(
        n_tx: usize,
        k_pairs: usize,
        h_est: Vec<DVector<Complex64>>,
        g_est: Vec<DVector<Complex64>>,
        eps: f64,
        sigma2: Vec<f64>,
        varsigma2: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        if k_pairs < 1 || n_tx < k_pairs {
            return Err(ChannelError::InvalidDimension { n_tx, k_pairs });
        }
        if eps.is_nan() || eps < 0.0 {
            return Err(ChannelError::InvalidParameter(format!(
                "eps = {eps} must be >= 0"
            )));
        }
        if h_est.len() != k_pairs || g_est.len() != k_pairs {
            return Err(ChannelError::InvalidParameter(format!(
                "expected {k_pairs} channel vectors, got {} users / {} eavesdroppers",
                h_est.len(),
                g_est.len()
            )));
        }
        if sigma2.len() != k_pairs || varsigma2.len() != k_pairs {
            return Err(ChannelError::InvalidParameter(
                "noise variance lists must have one entry per pair".into(),
            ));
        }
        for v in h_est.iter().chain(g_est.iter()) {
            if v.len() != n_tx {
                return Err(ChannelError::InvalidParameter(format!(
                    "channel vector length {} != n_tx {n_tx}",
                    v.len()
                )));
            }
        }
        for &s in sigma2.iter().chain(varsigma2.iter()) {
            if s.is_nan() || s <= 0.0 {
                return Err(ChannelError::InvalidParameter(format!(
                    "noise variance {s} must be > 0"
                )));
            }
        }
        Ok(Self {
            n_tx,
            k_pairs,
            h_est,
            g_est,
            eps,
            sigma2,
            varsigma2,
        })
    }
}

/// A ground-truth channel draw: the estimate plus an in-ball perturbation.
#[derive(Debug, Clone)]
pub struct TrueChannelInstance {
    pub h_true: Vec<DVector<Complex64>>,
    pub g_true: Vec<DVector<Complex64>>,
    pub dh: Vec<DVector<Complex64>>,
    pub dg: Vec<DVector<Complex64>>,
}

/// Draw a random channel set: every entry of every estimated channel is
/// i.i.d. CN(0, 1) (Rayleigh fading).
pub fn sample_channel_set(
    n_tx: usize,
    k_pairs: usize,
    eps: f64,
    sigma2: Vec<f64>,
    varsigma2: Vec<f64>,
    rng: &mut RngStream,
) -> Result<ChannelSet, ChannelError> {
    if k_pairs < 1 || n_tx < k_pairs {
        return Err(ChannelError::InvalidDimension { n_tx, k_pairs });
    }
    let h_est: Vec<_> = (0..k_pairs)
        .map(|_| rng.complex_gaussian_vector(n_tx))
        .collect();
    let g_est: Vec<_> = (0..k_pairs)
        .map(|_| rng.complex_gaussian_vector(n_tx))
        .collect();
    ChannelSet::new(n_tx, k_pairs, h_est, g_est, eps, sigma2, varsigma2)
}

/// Draw one true-channel realization: each perturbation uniform in the
/// closed ball of radius `cs.eps`, added to the estimates.
pub fn sample_true_instance(cs: &ChannelSet, rng: &mut RngStream) -> TrueChannelInstance {
    let dh: Vec<_> = (0..cs.k_pairs)
        .map(|_| rng.complex_ball(cs.n_tx, cs.eps))
        .collect();
    let dg: Vec<_> = (0..cs.k_pairs)
        .map(|_| rng.complex_ball(cs.n_tx, cs.eps))
        .collect();
    let h_true = cs.h_est.iter().zip(&dh).map(|(h, d)| h + d).collect();
    let g_true = cs.g_est.iter().zip(&dg).map(|(g, d)| g + d).collect();
    TrueChannelInstance {
        h_true,
        g_true,
        dh,
        dg,
    }
}

/// Which extreme of `Re(x^H y)` over the ball to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeSense {
    Max,
    Min,
}

/// Extremize `Re(x^H y)` over the ball `||x|| <= eps`.
///
/// The maximum is `eps * ||y||` at `x = (eps/||y||) y`; the minimum is its
/// negation at the antipodal point. For `y = 0` the bound is 0 regardless of
/// `x`, so `x = 0` is returned.
pub fn extreme_re_inner(
    y: &DVector<Complex64>,
    eps: f64,
    sense: ExtremeSense,
) -> (DVector<Complex64>, f64) {
    let norm = y.norm();
    if norm == 0.0 || eps == 0.0 {
        return (DVector::zeros(y.len()), 0.0);
    }
    let sign = match sense {
        ExtremeSense::Max => 1.0,
        ExtremeSense::Min => -1.0,
    };
    let x = y * Complex64::new(sign * eps / norm, 0.0);
    (x, sign * eps * norm)
}
