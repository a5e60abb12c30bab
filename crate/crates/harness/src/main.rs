//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 selftest failure,
//! 3 unrecoverable solver failure rate (more than half of all trials).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssrmax::config::{ConfigError, ExperimentConfig, Method};
use ssrmax::engine::{run_convergence, run_rand_effect, run_sweep};
use ssrmax::selftest::{selftest, Fault};

#[derive(Parser)]
#[command(
    name = "ssrmax",
    about = "Sum-secrecy-rate beamforming experiments: SCA, zero-forcing, and SLNR designs \
             under norm-bounded channel uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo sweep over SNR points and methods; emits the aggregate CSV.
    Simulate(RunArgs),
    /// Per-iteration SCA objective traces (trial,iter,objective_bits CSV).
    Convergence(RunArgs),
    /// Relaxed SDR value vs randomized feasible value, paired per trial.
    RandEffect(RunArgs),
    /// Lower-bound vs practical vs theoretical SSR study (SCA only).
    CompareBounds(RunArgs),
    /// Run the module invariant suites at small sizes.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file (every key can be overridden by a flag).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antenna count.
    #[arg(long)]
    ntx: Option<usize>,
    /// Number of user-eavesdropper pairs.
    #[arg(long)]
    k: Option<usize>,
    /// Channel estimation error norm bound.
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated SNR list in dB.
    #[arg(long)]
    snr: Option<String>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of {sca, zf, slnr}.
    #[arg(long)]
    methods: Option<String>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// SCA iteration cap.
    #[arg(long)]
    sca_max_iter: Option<usize>,
    /// SCA stopping tolerance in bits.
    #[arg(long)]
    sca_obj_tol: Option<f64>,
    /// SCA initialization attempts.
    #[arg(long)]
    sca_init_attempts: Option<usize>,
    /// Randomization candidate count.
    #[arg(long)]
    sca_rand_samples: Option<usize>,
    /// Enforce the strict positivity test on initial surrogates.
    #[arg(long)]
    sca_strict_sign: Option<bool>,
    /// Zero-forcing user selection: exhaustive or heuristic.
    #[arg(long)]
    zf_select: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn build_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides: [(&str, Option<String>); 13] = [
            ("ntx", self.ntx.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("eps", self.eps.map(|v| v.to_string())),
            ("snr", self.snr.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("methods", self.methods.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("sca_max_iter", self.sca_max_iter.map(|v| v.to_string())),
            ("sca_obj_tol", self.sca_obj_tol.map(|v| v.to_string())),
            (
                "sca_init_attempts",
                self.sca_init_attempts.map(|v| v.to_string()),
            ),
            (
                "sca_rand_samples",
                self.sca_rand_samples.map(|v| v.to_string()),
            ),
            (
                "sca_strict_sign",
                self.sca_strict_sign.map(|v| v.to_string()),
            ),
            ("zf_select", self.zf_select.clone()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, csv: &str) -> std::io::Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, csv),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    }
}

const EXIT_BAD_CONFIG: u8 = 1;
const EXIT_SELFTEST: u8 = 2;
const EXIT_SOLVER_FAILURES: u8 = 3;
const FAILURE_RATE_LIMIT: f64 = 0.5;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Simulate(args) => sweep_cmd(args, false),
        Cmd::CompareBounds(args) => sweep_cmd(args, true),
        Cmd::Convergence(args) => {
            let cfg = match args.build_config() {
                Ok(c) => c,
                Err(e) => return bad_config(e),
            };
            let out = run_convergence(&cfg);
            if args.emit(&out.to_csv()).is_err() {
                return ExitCode::from(EXIT_BAD_CONFIG);
            }
            let total = cfg.trials;
            if out.failures * 2 > total {
                return ExitCode::from(EXIT_SOLVER_FAILURES);
            }
            ExitCode::SUCCESS
        }
        Cmd::RandEffect(args) => {
            let cfg = match args.build_config() {
                Ok(c) => c,
                Err(e) => return bad_config(e),
            };
            let out = run_rand_effect(&cfg);
            if args.emit(&out.to_csv()).is_err() {
                return ExitCode::from(EXIT_BAD_CONFIG);
            }
            eprintln!(
                "mean relative randomization gap: {:.6}",
                out.mean_relative_gap()
            );
            if out.failures * 2 > cfg.trials {
                return ExitCode::from(EXIT_SOLVER_FAILURES);
            }
            ExitCode::SUCCESS
        }
        Cmd::Selftest => {
            let report = selftest(Fault::None);
            for (name, result) in &report.results {
                match result {
                    Ok(()) => println!("{name}: pass"),
                    Err(e) => println!("{name}: FAIL ({e})"),
                }
            }
            if report.passed() {
                println!("selftest: all invariants pass");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SELFTEST)
            }
        }
    }
}

fn sweep_cmd(args: RunArgs, force_sca_only: bool) -> ExitCode {
    let cfg = match args.build_config() {
        Ok(mut c) => {
            if force_sca_only {
                c.methods = vec![Method::Sca];
            }
            c
        }
        Err(e) => return bad_config(e),
    };
    let out = run_sweep(&cfg);
    if let Err(e) = args.emit(&out.to_csv()) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(EXIT_BAD_CONFIG);
    }
    if out.failure_fraction() > FAILURE_RATE_LIMIT {
        eprintln!(
            "unrecoverable solver failure rate: {:.0}% of trials",
            100.0 * out.failure_fraction()
        );
        return ExitCode::from(EXIT_SOLVER_FAILURES);
    }
    ExitCode::SUCCESS
}

fn bad_config(e: ConfigError) -> ExitCode {
    eprintln!("invalid config: {e}");
    ExitCode::from(EXIT_BAD_CONFIG)
}
