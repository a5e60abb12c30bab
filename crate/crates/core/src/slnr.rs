//! Signal-to-leakage-and-noise-ratio baseline beamformer.
//!
//! Each user's direction maximizes its own signal power over the power
//! leaking into the other users' channel space plus noise. The optimizing
//! direction is the dominant eigenvector of
//! `(sigma_i^2 I + Hl_i^H Hl_i)^(-1) h_i* h_i^T` with `Hl_i` stacking the
//! other users' estimated channels; since the target matrix is rank one this
//! is just the normalized solve `(sigma_i^2 I + Hl_i^H Hl_i)^(-1) h_i*`.
//! The power budget is split equally across users.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::rates::BeamformerSet;

/// Leakage-minimizing beamformers on the estimated channels with an equal
/// power split `||w_i||^2 = P/K`.
pub fn slnr_beamformers(cs: &ChannelSet, power: f64) -> BeamformerSet {
    assert!(power > 0.0, "power budget must be positive");
    let n = cs.n_tx;
    let k = cs.k_pairs;
    let per_user = power / k as f64;
    let w = (0..k)
        .map(|i| {
            // sigma^2 I + sum_{k != i} h_k* h_k^T, Hermitian positive definite.
            let mut m = DMatrix::from_diagonal_element(n, n, Complex64::new(cs.sigma2[i], 0.0));
            for j in 0..k {
                if j != i {
                    let hc = cs.h_est[j].conjugate();
                    m += &hc * hc.adjoint();
                }
            }
            let rhs = cs.h_est[i].conjugate();
            let dir = m
                .cholesky()
                .expect("leakage matrix is positive definite for sigma^2 > 0")
                .solve(&rhs);
            let scale = Complex64::new(per_user.sqrt() / dir.norm(), 0.0);
            dir * scale
        })
        .collect();
    BeamformerSet::new(w, power)
}
