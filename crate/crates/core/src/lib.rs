//! Robust beamforming designs for sum-secrecy-rate (SSR) maximization in a
//! multi-user MISO wiretap downlink with norm-bounded channel-estimation error.
//!
//! A base station with `n_tx` antennas serves `k_pairs` single-antenna users,
//! each wiretapped by a dedicated single-antenna eavesdropper. The transmitter
//! only knows channel estimates whose error is norm-bounded by `eps`, so all
//! designs optimize a worst-case lower bound of the SSR built from
//! Cauchy-Schwarz extremizers of the estimation error.
//!
//! Three designs are provided:
//!
//! * [`sca`] — semidefinite relaxation plus successive convex approximation:
//!   the exponential rate terms are Taylor-linearized around the previous
//!   iterate and each subproblem is solved as a conic program (PSD + SOC +
//!   exponential cones), followed by Gaussian randomization to recover
//!   rank-one beamformers.
//! * [`zf`] — zero-forcing directions from the pseudo-inverse of the stacked
//!   user/eavesdropper channels (nulling all eavesdroppers and cross-user
//!   interference), with closed-form water-filling power allocation and user
//!   selection when the antenna count cannot null everyone.
//! * [`slnr`] — the signal-to-leakage-and-noise-ratio baseline.
//!
//! [`conic`] carries the solver-agnostic conic-program IR these designs are
//! lowered to; [`channel`] and [`rates`] hold the data model and the exact /
//! worst-case rate expressions.

pub mod channel;
pub mod conic;
pub mod rates;
pub mod sca;
pub mod slnr;
pub mod zf;

pub use channel::{ChannelError, ChannelSet, RngStream, TrueChannelInstance};
pub use rates::{BeamformerSet, CovarianceSet, LowerBoundSsr};
