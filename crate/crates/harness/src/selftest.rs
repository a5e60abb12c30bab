//! Named invariant checks over every module at small sizes, used by the
//! `selftest` subcommand. Each check is independent and reports its own
//! name on failure; the fault-injection hook corrupts a known-good result
//! so the test of the test can verify failures are caught and named.

use ssrmax_core::channel::{
    extreme_re_inner, sample_channel_set, sample_true_instance, ExtremeSense, RngStream,
};
use ssrmax_core::conic::{herm_to_real, real_to_herm, ScaSubproblem};
use ssrmax_core::rates::{ssr_exact, ssr_lower_bound, BeamformerSet};
use ssrmax_core::sca::{run_sca, ScaConfig};
use ssrmax_core::slnr::slnr_beamformers;
use ssrmax_core::zf::{waterfill, zf_directions};

use nalgebra::DVector;
use num_complex::Complex64;

/// Deliberate corruption applied before the checks run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Skew the water-filling allocation so the KKT certificate must fail.
    CorruptWaterfill,
}

pub struct SelftestReport {
    /// `(invariant name, outcome)` in execution order.
    pub results: Vec<(&'static str, Result<(), String>)>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|(_, r)| r.is_ok())
    }

    pub fn first_failure(&self) -> Option<(&'static str, &str)> {
        self.results
            .iter()
            .find_map(|(name, r)| r.as_ref().err().map(|e| (*name, e.as_str())))
    }
}

fn check_extremizer() -> Result<(), String> {
    let mut rng = RngStream::new(9001, 0);
    for _ in 0..50 {
        let y = rng.complex_gaussian_vector(4);
        let eps = 0.5 * rng.uniform();
        let bound = eps * y.norm();
        let (x, v) = extreme_re_inner(&y, eps, ExtremeSense::Max);
        let attained: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if (attained - bound).abs() > 1e-12 || (v - bound).abs() > 1e-12 {
            return Err(format!(
                "extremizer misses the bound: {attained} vs {bound}"
            ));
        }
        for _ in 0..200 {
            let s = rng.complex_ball(4, eps);
            let val: f64 = s.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if val > bound + 1e-12 || val < -bound - 1e-12 {
                return Err(format!(
                    "sampled point outside [{}, {}]: {val}",
                    -bound, bound
                ));
            }
        }
    }
    Ok(())
}

fn check_perturbation_ball() -> Result<(), String> {
    let mut rng = RngStream::new(9002, 0);
    let cs = sample_channel_set(4, 2, 0.2, vec![1.0; 2], vec![1.0; 2], &mut rng)
        .map_err(|e| e.to_string())?;
    for _ in 0..500 {
        let inst = sample_true_instance(&cs, &mut rng);
        for d in inst.dh.iter().chain(inst.dg.iter()) {
            if d.norm() > cs.eps + 1e-12 {
                return Err(format!(
                    "perturbation norm {} exceeds eps {}",
                    d.norm(),
                    cs.eps
                ));
            }
        }
    }
    Ok(())
}

fn check_eps0_collapse() -> Result<(), String> {
    let mut rng = RngStream::new(9003, 0);
    for k in 1..=4usize {
        let n = (2 * k).min(8);
        let cs = sample_channel_set(n, k, 0.0, vec![1.0; k], vec![1.0; k], &mut rng)
            .map_err(|e| e.to_string())?;
        let mut w: Vec<DVector<Complex64>> =
            (0..k).map(|_| rng.complex_gaussian_vector(n)).collect();
        let total: f64 = w.iter().map(|v| v.norm_squared()).sum();
        let scale = Complex64::new((4.0 / total).sqrt(), 0.0);
        for v in &mut w {
            *v *= scale;
        }
        let bf = BeamformerSet::new(w, 4.0);
        let lb = ssr_lower_bound(&cs, &bf).bits;
        let exact = ssr_exact(&cs.h_est, &cs.g_est, &cs.sigma2, &cs.varsigma2, &bf);
        if (lb - exact).abs() > 1e-9 {
            return Err(format!("lower bound {lb} != exact {exact} at eps=0"));
        }
    }
    Ok(())
}

fn check_hermitian_embedding() -> Result<(), String> {
    let mut rng = RngStream::new(9004, 0);
    for n in 1..=6 {
        let m = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.complex_gaussian());
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let emb = herm_to_real(&h).map_err(|e| e.to_string())?;
        let back = real_to_herm(&emb);
        if (&back - &h).norm() > 1e-12 {
            return Err(format!("round trip error {}", (&back - &h).norm()));
        }
        if (emb.trace() - 2.0 * h.trace().re).abs() > 1e-12 {
            return Err("trace does not double".into());
        }
    }
    Ok(())
}

fn check_subproblem_size() -> Result<(), String> {
    use ssrmax_core::conic::build_sca_subproblem;
    let mut rng = RngStream::new(9005, 0);
    for (n, k) in [(2usize, 1usize), (4, 2), (6, 3)] {
        let cs = sample_channel_set(n, k, 0.1, vec![1.0; k], vec![1.0; k], &mut rng)
            .map_err(|e| e.to_string())?;
        let sub = build_sca_subproblem(&cs, 1.0, &vec![0.0; k], &vec![0.0; k]);
        if sub.audit() != ScaSubproblem::expected_size(n, k) {
            return Err(format!("size audit mismatch at ({n}, {k})"));
        }
    }
    Ok(())
}

fn check_sca_monotone() -> Result<(), String> {
    let mut rng = RngStream::new(9006, 0);
    let cs = sample_channel_set(4, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng)
        .map_err(|e| e.to_string())?;
    let cfg = ScaConfig {
        max_iter: 20,
        ..Default::default()
    };
    let out = run_sca(&cs, 10.0, &cfg, &mut rng).map_err(|e| e.to_string())?;
    for w in out.trace.windows(2) {
        if w[1] < w[0] - 1e-6 {
            return Err(format!("objective decreased: {} -> {}", w[0], w[1]));
        }
    }
    if out.beamformer_value_bits > out.relaxed_value_bits + 1e-6 {
        return Err("feasible value exceeds the relaxation".into());
    }
    Ok(())
}

fn check_zf_nulling() -> Result<(), String> {
    let mut rng = RngStream::new(9007, 0);
    let cs = sample_channel_set(8, 4, 0.1, vec![1.0; 4], vec![1.0; 4], &mut rng)
        .map_err(|e| e.to_string())?;
    let dirs = zf_directions(&cs, &[0, 1, 2, 3]).map_err(|e| e.to_string())?;
    for i in 0..4 {
        for j in 0..4 {
            let vh = dirs.v[i].dot(&cs.h_est[j].conjugate());
            let vg = dirs.v[i].dot(&cs.g_est[j].conjugate());
            let delta = if i == j { 1.0 } else { 0.0 };
            if (vh - Complex64::new(delta, 0.0)).norm() > 1e-8 || vg.norm() > 1e-8 {
                return Err(format!("nulling residual too large at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

fn check_waterfill_kkt(fault: Fault) -> Result<(), String> {
    let mut rng = RngStream::new(9008, 0);
    let p = 5.0;
    let cs = sample_channel_set(8, 4, 0.1, vec![1.0; 4], vec![1.0; 4], &mut rng)
        .map_err(|e| e.to_string())?;
    let dirs = zf_directions(&cs, &[0, 1, 2, 3]).map_err(|e| e.to_string())?;
    let mut alloc = waterfill(&dirs, &cs, p);
    if fault == Fault::CorruptWaterfill {
        alloc.power[0] += 0.05 * p;
    }
    // KKT certificate: active users sit exactly on the water level, the
    // budget is exhausted, ineligible users carry nothing.
    let mu = 1.0 / alloc.lambda;
    let mut total = 0.0;
    for (j, &user) in dirs.selected.iter().enumerate() {
        total += alloc.power[j];
        let denom = 1.0 - 2.0 * cs.eps * dirs.v_norm[j];
        if denom <= 0.0 {
            if alloc.power[j] != 0.0 {
                return Err(format!("user {user} must carry zero power"));
            }
            continue;
        }
        let c = dirs.v_norm[j].powi(2) * cs.sigma2[user] / denom;
        if alloc.active[j] {
            if ((mu - c) - alloc.power[j]).abs() > 1e-8 {
                return Err(format!(
                    "active user {user} off the water level: P = {}, mu - c = {}",
                    alloc.power[j],
                    mu - c
                ));
            }
        } else if mu > c + 1e-8 {
            return Err(format!("inactive user {user} below the water level"));
        }
    }
    if !alloc.no_eligible_user && (total - p).abs() > 1e-8 {
        return Err(format!("power not exhausted: {total} vs {p}"));
    }
    Ok(())
}

fn check_slnr_power() -> Result<(), String> {
    let mut rng = RngStream::new(9009, 0);
    let cs = sample_channel_set(6, 3, 0.1, vec![1.0; 3], vec![1.0; 3], &mut rng)
        .map_err(|e| e.to_string())?;
    let bf = slnr_beamformers(&cs, 7.0);
    if (bf.total_power() - 7.0).abs() > 1e-9 {
        return Err(format!("total power {} != 7", bf.total_power()));
    }
    Ok(())
}

fn check_determinism() -> Result<(), String> {
    let draw = || {
        let mut rng = RngStream::new(9010, 3);
        rng.complex_gaussian_vector(8)
    };
    if draw() != draw() {
        return Err("identical (seed, substream) produced different draws".into());
    }
    Ok(())
}

/// Run every invariant suite at small sizes.
pub fn selftest(fault: Fault) -> SelftestReport {
    let results: Vec<(&'static str, Result<(), String>)> = vec![
        ("extremizer-bound", check_extremizer()),
        ("perturbation-ball", check_perturbation_ball()),
        ("eps0-collapse", check_eps0_collapse()),
        ("hermitian-embedding", check_hermitian_embedding()),
        ("subproblem-size", check_subproblem_size()),
        ("sca-monotone", check_sca_monotone()),
        ("zf-nulling", check_zf_nulling()),
        ("waterfill-kkt", check_waterfill_kkt(fault)),
        ("slnr-power", check_slnr_power()),
        ("determinism", check_determinism()),
    ];
    SelftestReport { results }
}
