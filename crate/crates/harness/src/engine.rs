//! Sweep, convergence, and randomization-effect experiments plus their CSV
//! emission.
//!
//! Substream allocation: trial `t` owns substreams `8t .. 8t+7` of the
//! config seed — `8t` estimated-channel draw, `8t+1` true-channel draw,
//! `8t+2` design randomness, `8t+3` theoretical-design randomness. Fresh
//! streams are derived per use, so trials can run in any order and results
//! are byte-identical for a fixed config.
//!
//! CSV schema (sweeps): header `snr_db,method,metric,mean,stddev,trials,failures`,
//! one metric per row, metrics in `{lb_ssr, practical_ssr, theoretical_ssr,
//! lb_ssr_per_user, iterations}`; floats carry 9 significant digits. The
//! stddev column uses the unbiased (n-1) estimator, stated on the comment
//! line above the header.

use ssrmax_core::channel::{
    sample_channel_set, sample_true_instance, ChannelSet, RngStream, TrueChannelInstance,
};
use ssrmax_core::rates::{ssr_exact, ssr_lower_bound, BeamformerSet};
use ssrmax_core::sca::{run_sca, ScaError};
use ssrmax_core::slnr::slnr_beamformers;
use ssrmax_core::zf::{assemble_beamformers, select_users, waterfill, zf_directions, ZfError};

use crate::config::{ExperimentConfig, Method};

const STREAMS_PER_TRIAL: u64 = 8;
const STREAM_CHANNEL: u64 = 0;
const STREAM_TRUE: u64 = 1;
const STREAM_DESIGN: u64 = 2;
const STREAM_THEORETICAL: u64 = 3;

/// One channel realization for one trial.
pub struct TrialDraw {
    pub cs: ChannelSet,
    pub inst: TrueChannelInstance,
}

fn default_draw(cfg: &ExperimentConfig, trial: u64) -> TrialDraw {
    let mut rng = RngStream::new(cfg.seed, trial * STREAMS_PER_TRIAL + STREAM_CHANNEL);
    let cs = sample_channel_set(
        cfg.n_tx,
        cfg.k_pairs,
        cfg.eps,
        vec![1.0; cfg.k_pairs],
        vec![1.0; cfg.k_pairs],
        &mut rng,
    )
    .expect("validated config");
    let mut rng_true = RngStream::new(cfg.seed, trial * STREAMS_PER_TRIAL + STREAM_TRUE);
    let inst = sample_true_instance(&cs, &mut rng_true);
    TrialDraw { cs, inst }
}

struct Design {
    bf: BeamformerSet,
    iterations: usize,
}

fn design_method(
    method: Method,
    cs: &ChannelSet,
    power: f64,
    cfg: &ExperimentConfig,
    rng: &mut RngStream,
) -> Result<Design, String> {
    match method {
        Method::Sca => {
            let out = run_sca(cs, power, &cfg.sca, rng).map_err(|e: ScaError| e.to_string())?;
            Ok(Design {
                bf: out.beamformers,
                iterations: out.iterations,
            })
        }
        Method::Zf => {
            let subset: Vec<usize> = if cs.n_tx >= 2 * cs.k_pairs {
                (0..cs.k_pairs).collect()
            } else {
                let (subset, _) = select_users(cs, power, cfg.zf_selection)
                    .map_err(|e: ZfError| e.to_string())?;
                subset
            };
            let dirs = zf_directions(cs, &subset).map_err(|e| e.to_string())?;
            let alloc = waterfill(&dirs, cs, power);
            Ok(Design {
                bf: assemble_beamformers(cs, &dirs, &alloc, power),
                iterations: 0,
            })
        }
        Method::Slnr => Ok(Design {
            bf: slnr_beamformers(cs, power),
            iterations: 0,
        }),
    }
}

/// Per-trial metric values for one (snr, method) cell; `None` marks a
/// failed trial.
pub struct MethodSeries {
    pub snr_db: f64,
    pub method: Method,
    pub lb_ssr: Vec<Option<f64>>,
    pub practical_ssr: Vec<Option<f64>>,
    pub theoretical_ssr: Vec<Option<f64>>,
    pub iterations: Vec<Option<f64>>,
    pub degenerate: Vec<bool>,
}

/// Mean and unbiased standard deviation of the successful trials.
#[derive(Debug, Clone, Copy)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
}

fn stat(values: &[Option<f64>]) -> Stat {
    let xs: Vec<f64> = values.iter().flatten().cloned().collect();
    if xs.is_empty() {
        return Stat {
            mean: 0.0,
            stddev: 0.0,
        };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let stddev = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Stat { mean, stddev }
}

/// Aggregated record for one (snr, method) cell.
pub struct ResultRecord {
    pub snr_db: f64,
    pub method: Method,
    pub lb_ssr: Stat,
    pub practical_ssr: Stat,
    pub theoretical_ssr: Stat,
    pub lb_ssr_per_user: Stat,
    pub iterations: Stat,
    /// Successful trials included in the aggregates.
    pub trials: usize,
    pub failures: usize,
    pub degenerate_count: usize,
}

pub struct SweepOutput {
    pub config: ExperimentConfig,
    pub series: Vec<MethodSeries>,
    pub records: Vec<ResultRecord>,
}

/// 9-significant-digit float formatting used in all CSV bodies.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

const CSV_PREAMBLE: &str = "# stddev: unbiased (n-1) estimator";
const CSV_HEADER: &str = "snr_db,method,metric,mean,stddev,trials,failures";

impl SweepOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_PREAMBLE);
        out.push('\n');
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            for (metric, s) in [
                ("lb_ssr", r.lb_ssr),
                ("practical_ssr", r.practical_ssr),
                ("theoretical_ssr", r.theoretical_ssr),
                ("lb_ssr_per_user", r.lb_ssr_per_user),
                ("iterations", r.iterations),
            ] {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.snr_db,
                    r.method.name(),
                    metric,
                    fmt_float(s.mean),
                    fmt_float(s.stddev),
                    r.trials,
                    r.failures
                ));
            }
        }
        out
    }

    /// Fraction of failed (trial, snr, method) cells, for the exit-code
    /// contract.
    pub fn failure_fraction(&self) -> f64 {
        let mut total = 0usize;
        let mut failed = 0usize;
        for s in &self.series {
            total += s.lb_ssr.len();
            failed += s.lb_ssr.iter().filter(|v| v.is_none()).count();
        }
        if total == 0 {
            0.0
        } else {
            failed as f64 / total as f64
        }
    }
}

fn record_from_series(s: &MethodSeries, k_pairs: usize) -> ResultRecord {
    let successes = s.lb_ssr.iter().filter(|v| v.is_some()).count();
    let per_user: Vec<Option<f64>> = s
        .lb_ssr
        .iter()
        .map(|v| v.map(|x| x / k_pairs as f64))
        .collect();
    ResultRecord {
        snr_db: s.snr_db,
        method: s.method,
        lb_ssr: stat(&s.lb_ssr),
        practical_ssr: stat(&s.practical_ssr),
        theoretical_ssr: stat(&s.theoretical_ssr),
        lb_ssr_per_user: stat(&per_user),
        iterations: stat(&s.iterations),
        trials: successes,
        failures: s.lb_ssr.len() - successes,
        degenerate_count: s.degenerate.iter().filter(|&&d| d).count(),
    }
}

/// Full sweep with a custom channel source (tests inject fixtures here).
pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    draw: impl Fn(&ExperimentConfig, u64) -> TrialDraw,
) -> SweepOutput {
    let n_cells = cfg.snr_db_list.len() * cfg.methods.len();
    let mut series: Vec<MethodSeries> = Vec::with_capacity(n_cells);
    for &snr in &cfg.snr_db_list {
        for &method in &cfg.methods {
            series.push(MethodSeries {
                snr_db: snr,
                method,
                lb_ssr: vec![None; cfg.trials],
                practical_ssr: vec![None; cfg.trials],
                theoretical_ssr: vec![None; cfg.trials],
                iterations: vec![None; cfg.trials],
                degenerate: vec![false; cfg.trials],
            });
        }
    }

    for trial in 0..cfg.trials as u64 {
        let TrialDraw { cs, inst } = draw(cfg, trial);
        // The design on the true channels with eps = 0 (for theoretical SSR)
        // reuses the same channel set shape.
        let cs_true = ChannelSet::new(
            cfg.n_tx,
            cfg.k_pairs,
            inst.h_true.clone(),
            inst.g_true.clone(),
            0.0,
            cs.sigma2.clone(),
            cs.varsigma2.clone(),
        )
        .expect("true channels inherit valid dimensions");

        for (si, &snr) in cfg.snr_db_list.iter().enumerate() {
            let power = ExperimentConfig::power(snr);
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let cell = &mut series[si * cfg.methods.len() + mi];
                let mut rng_design =
                    RngStream::new(cfg.seed, trial * STREAMS_PER_TRIAL + STREAM_DESIGN);
                let Ok(d) = design_method(method, &cs, power, cfg, &mut rng_design) else {
                    continue;
                };
                let lb = ssr_lower_bound(&cs, &d.bf);
                let practical =
                    ssr_exact(&inst.h_true, &inst.g_true, &cs.sigma2, &cs.varsigma2, &d.bf);

                let mut rng_theo =
                    RngStream::new(cfg.seed, trial * STREAMS_PER_TRIAL + STREAM_THEORETICAL);
                let Ok(dt) = design_method(method, &cs_true, power, cfg, &mut rng_theo) else {
                    continue;
                };
                let theoretical = ssr_exact(
                    &inst.h_true,
                    &inst.g_true,
                    &cs.sigma2,
                    &cs.varsigma2,
                    &dt.bf,
                );

                let t = trial as usize;
                cell.lb_ssr[t] = Some(lb.bits);
                cell.practical_ssr[t] = Some(practical);
                cell.theoretical_ssr[t] = Some(theoretical);
                cell.iterations[t] = Some(d.iterations as f64);
                cell.degenerate[t] = lb.degenerate;
            }
        }
    }

    let records = series
        .iter()
        .map(|s| record_from_series(s, cfg.k_pairs))
        .collect();
    SweepOutput {
        config: cfg.clone(),
        series,
        records,
    }
}

/// Monte Carlo sweep over the configured SNR points and methods.
pub fn run_sweep(cfg: &ExperimentConfig) -> SweepOutput {
    run_sweep_with(cfg, default_draw)
}

/// One convergence-trace row: the SCA objective after each iteration.
pub struct ConvRow {
    pub trial: u64,
    pub iter: usize,
    pub objective_bits: f64,
}

pub struct ConvergenceOutput {
    pub rows: Vec<ConvRow>,
    pub trace_lengths: Vec<usize>,
    pub failures: usize,
}

impl ConvergenceOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,iter,objective_bits\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.trial,
                r.iter,
                fmt_float(r.objective_bits)
            ));
        }
        out
    }
}

/// Per-iteration SCA objective traces at the first configured SNR point.
pub fn run_convergence(cfg: &ExperimentConfig) -> ConvergenceOutput {
    let power = ExperimentConfig::power(cfg.snr_db_list[0]);
    let mut rows = Vec::new();
    let mut trace_lengths = Vec::new();
    let mut failures = 0;
    for trial in 0..cfg.trials as u64 {
        let TrialDraw { cs, .. } = default_draw(cfg, trial);
        let mut rng = RngStream::new(cfg.seed, trial * STREAMS_PER_TRIAL + STREAM_DESIGN);
        match run_sca(&cs, power, &cfg.sca, &mut rng) {
            Ok(out) => {
                trace_lengths.push(out.trace.len());
                for (i, &obj) in out.trace.iter().enumerate() {
                    rows.push(ConvRow {
                        trial,
                        iter: i + 1,
                        objective_bits: obj,
                    });
                }
            }
            Err(_) => failures += 1,
        }
    }
    ConvergenceOutput {
        rows,
        trace_lengths,
        failures,
    }
}

/// Relaxed-vs-randomized values, per trial, at the first configured SNR.
pub struct RandEffectOutput {
    pub snr_db: f64,
    /// `(relaxed SDR value, randomized feasible value)` in bits.
    pub per_trial: Vec<(f64, f64)>,
    pub failures: usize,
}

impl RandEffectOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_PREAMBLE);
        out.push('\n');
        out.push_str(CSV_HEADER);
        out.push('\n');
        let norand: Vec<Option<f64>> = self.per_trial.iter().map(|&(a, _)| Some(a)).collect();
        let rand: Vec<Option<f64>> = self.per_trial.iter().map(|&(_, b)| Some(b)).collect();
        for (name, vals) in [("sca-norand", norand), ("sca-rand", rand)] {
            let s = stat(&vals);
            out.push_str(&format!(
                "{},{},lb_ssr,{},{},{},{}\n",
                self.snr_db,
                name,
                fmt_float(s.mean),
                fmt_float(s.stddev),
                vals.len(),
                self.failures
            ));
        }
        out
    }

    /// Mean relative gap `(relaxed - randomized) / |relaxed|`.
    pub fn mean_relative_gap(&self) -> f64 {
        if self.per_trial.is_empty() {
            return 0.0;
        }
        self.per_trial
            .iter()
            .map(|&(norand, rand)| (norand - rand) / norand.abs().max(1e-12))
            .sum::<f64>()
            / self.per_trial.len() as f64
    }
}

/// Effect of the rank-one randomization: relaxed SDR value vs the value of
/// the recovered feasible beamformers, paired per trial.
pub fn run_rand_effect(cfg: &ExperimentConfig) -> RandEffectOutput {
    let snr_db = cfg.snr_db_list[0];
    let power = ExperimentConfig::power(snr_db);
    let mut per_trial = Vec::new();
    let mut failures = 0;
    for trial in 0..cfg.trials as u64 {
        let TrialDraw { cs, .. } = default_draw(cfg, trial);
        let mut rng = RngStream::new(cfg.seed, trial * STREAMS_PER_TRIAL + STREAM_DESIGN);
        match run_sca(&cs, power, &cfg.sca, &mut rng) {
            Ok(out) => per_trial.push((out.relaxed_value_bits, out.beamformer_value_bits)),
            Err(_) => failures += 1,
        }
    }
    RandEffectOutput {
        snr_db,
        per_trial,
        failures,
    }
}
