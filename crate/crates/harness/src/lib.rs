//! Experiment engine for the sum-secrecy-rate beamforming designs: Monte
//! Carlo sweeps over SNR and estimation-error bound, method comparison,
//! convergence traces, randomization-effect studies, and a self-test suite.
//!
//! Noise convention: all noise variances are 1 and the SNR sweep varies the
//! sum power `P = 10^(SNR/10)`. Every trial draws one estimated channel set
//! (shared by all methods and SNR points, so comparisons are paired) plus
//! one true-channel realization for practical-SSR evaluation. All randomness
//! is keyed by `(seed, trial)` substreams, so trials are order-independent
//! and outputs are byte-deterministic for a fixed config.

pub mod config;
pub mod engine;
pub mod selftest;

pub use config::{ConfigError, ExperimentConfig, Method};
pub use engine::{
    run_convergence, run_rand_effect, run_sweep, ConvergenceOutput, RandEffectOutput, ResultRecord,
    SweepOutput,
};
