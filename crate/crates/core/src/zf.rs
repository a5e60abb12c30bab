//! Zero-forcing beamforming: pseudo-inverse directions that null every
//! selected eavesdropper and all cross-user interference, closed-form
//! water-filling power allocation, and user selection when the antenna
//! count cannot null everyone.
//!
//! With the stacked estimated-channel matrix `H = (h1* ... hm* g1* ... gm*)`
//! and `v_i^T` the i-th row of its Moore-Penrose pseudo-inverse,
//! `v_i^T h_j* = delta_ij` and `v_i^T g_j* = 0`, so the beamformer
//! `w_i = (v_i* / ||v_i||) sqrt(P_i)` reduces the robust objective to
//! independent log terms; the optimal powers follow a common water level.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::ChannelSet;
use crate::conic::solve::{solve, DEFAULT_TOL};
use crate::conic::{ConicProgram, LinExpr, SolveStatus};
use crate::rates::BeamformerSet;

#[derive(Debug, Error)]
pub enum ZfError {
    #[error("zero-forcing needs n_tx >= {needed} antennas, have {n_tx}")]
    Dimension { n_tx: usize, needed: usize },
    #[error("stacked channel matrix is rank-deficient (sigma_min/sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("no user subset admits full-rank zero-forcing")]
    NoFeasibleSubset,
    #[error("power-allocation solver failed: {0}")]
    Solver(String),
}

/// Nulling directions for a selected user subset.
#[derive(Debug, Clone)]
pub struct ZfDirections {
    /// User indices in play, ascending.
    pub selected: Vec<usize>,
    /// `v_i` (i-th pseudo-inverse row as a vector), parallel to `selected`.
    pub v: Vec<DVector<Complex64>>,
    pub v_norm: Vec<f64>,
}

/// Water-filling output, parallel to the direction set's `selected`.
#[derive(Debug, Clone)]
pub struct PowerAllocation {
    pub power: Vec<f64>,
    /// Lagrange multiplier; the water level is `1/lambda`.
    pub lambda: f64,
    pub active: Vec<bool>,
    pub no_eligible_user: bool,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

const RANK_CUTOFF: f64 = 1e-10;

/// Pseudo-inverse directions for the given subset of users.
pub fn zf_directions(cs: &ChannelSet, subset: &[usize]) -> Result<ZfDirections, ZfError> {
    let m = subset.len();
    assert!(m >= 1, "subset must be nonempty");
    if cs.n_tx < 2 * m {
        return Err(ZfError::Dimension {
            n_tx: cs.n_tx,
            needed: 2 * m,
        });
    }
    let mut selected = subset.to_vec();
    selected.sort_unstable();
    selected.dedup();
    assert_eq!(selected.len(), m, "subset must not repeat users");

    // Columns: conjugated user channels, then conjugated eavesdropper ones.
    let stacked = DMatrix::from_fn(cs.n_tx, 2 * m, |r, c| {
        if c < m {
            cs.h_est[selected[c]][r].conj()
        } else {
            cs.g_est[selected[c - m]][r].conj()
        }
    });
    let svd = stacked.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if s_min < RANK_CUTOFF * s_max {
        return Err(ZfError::RankDeficient {
            ratio: s_min / s_max,
        });
    }
    let pinv = svd
        .pseudo_inverse(RANK_CUTOFF * s_max)
        .map_err(|e| ZfError::Solver(e.to_string()))?;

    let v: Vec<DVector<Complex64>> = (0..m)
        .map(|i| pinv.row(i).transpose().into_owned())
        .collect();
    let v_norm = v.iter().map(|x| x.norm()).collect();
    Ok(ZfDirections {
        selected,
        v,
        v_norm,
    })
}

/// Per-user water-filling cutoff `c_i = ||v_i||^2 sigma_i^2 / (1 - 2 eps ||v_i||)`,
/// or `None` when the robust gain `1 - 2 eps ||v_i||` is nonpositive (such a
/// user can only lose by transmitting and is forced to zero power).
fn cutoffs(dirs: &ZfDirections, cs: &ChannelSet) -> Vec<Option<f64>> {
    dirs.selected
        .iter()
        .zip(&dirs.v_norm)
        .map(|(&user, &vn)| {
            let denom = 1.0 - 2.0 * cs.eps * vn;
            (denom > 0.0).then(|| vn * vn * cs.sigma2[user] / denom)
        })
        .collect()
}

/// Closed-form water-filling: `P_i = (1/lambda - c_i)^+` with the water
/// level found by bisection on the monotone power residual, then pinned
/// exactly on the settled active set.
pub fn waterfill(dirs: &ZfDirections, cs: &ChannelSet, power: f64) -> PowerAllocation {
    assert!(power > 0.0, "power budget must be positive");
    let m = dirs.selected.len();
    let cut = cutoffs(dirs, cs);
    let eligible: Vec<f64> = cut.iter().flatten().cloned().collect();
    if eligible.is_empty() {
        return PowerAllocation {
            power: vec![0.0; m],
            lambda: f64::INFINITY,
            active: vec![false; m],
            no_eligible_user: true,
        };
    }

    let residual =
        |mu: f64| -> f64 { eligible.iter().map(|c| (mu - c).max(0.0)).sum::<f64>() - power };
    let mut lo = eligible.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = eligible.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + power;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    // Exact water level on the active set the bisection settled on; iterate
    // in case the set boundary moves under the exact level.
    let mut mu = hi;
    for _ in 0..=eligible.len() {
        let active: Vec<f64> = eligible.iter().filter(|&&c| c < mu).cloned().collect();
        if active.is_empty() {
            break;
        }
        let exact = (power + active.iter().sum::<f64>()) / active.len() as f64;
        if (exact - mu).abs() <= 1e-15 * mu.abs().max(1.0) {
            mu = exact;
            break;
        }
        mu = exact;
    }
    debug_assert!(residual(mu).abs() <= 1e-10 * power);

    let mut alloc_power = vec![0.0; m];
    let mut active = vec![false; m];
    for i in 0..m {
        if let Some(c) = cut[i] {
            let p = (mu - c).max(0.0);
            alloc_power[i] = p;
            active[i] = p > 0.0;
        }
    }
    PowerAllocation {
        power: alloc_power,
        lambda: 1.0 / mu,
        active,
        no_eligible_user: false,
    }
}

/// The reduced robust objective of the zero-forcing design, in bits:
/// `sum_i log2(1 + (1 - 2 eps ||v_i||) P_i / (||v_i||^2 sigma_i^2))`.
pub fn zf_ssr(dirs: &ZfDirections, alloc: &PowerAllocation, cs: &ChannelSet) -> f64 {
    dirs.selected
        .iter()
        .zip(&dirs.v_norm)
        .zip(&alloc.power)
        .map(|((&user, &vn), &p)| {
            if p <= 0.0 {
                return 0.0;
            }
            let denom = 1.0 - 2.0 * cs.eps * vn;
            (1.0 + denom * p / (vn * vn * cs.sigma2[user])).log2()
        })
        .sum()
}

/// Assemble the full-K beamformer set `w_i = (v_i*/||v_i||) sqrt(P_i)`
/// (zero vectors for unselected users).
pub fn assemble_beamformers(
    cs: &ChannelSet,
    dirs: &ZfDirections,
    alloc: &PowerAllocation,
    power_budget: f64,
) -> BeamformerSet {
    let mut w = vec![DVector::zeros(cs.n_tx); cs.k_pairs];
    for (j, &user) in dirs.selected.iter().enumerate() {
        let scale = Complex64::new(alloc.power[j].sqrt() / dirs.v_norm[j], 0.0);
        w[user] = dirs.v[j].conjugate() * scale;
    }
    BeamformerSet::new(w, power_budget)
}

/// Reference power allocation through the conic solver (exponential-cone
/// epigraphs of the log terms). Test oracle for [`waterfill`].
pub fn waterfill_convex_oracle(
    dirs: &ZfDirections,
    cs: &ChannelSet,
    power: f64,
) -> Result<PowerAllocation, ZfError> {
    let m = dirs.selected.len();
    let mut prog = ConicProgram::new();
    let zs: Vec<usize> = (0..m).map(|i| prog.add_var(format!("z{i}"))).collect();
    let ps: Vec<usize> = (0..m).map(|i| prog.add_var(format!("P{i}"))).collect();
    let ms: Vec<usize> = (0..m).map(|i| prog.add_var(format!("m{i}"))).collect();
    for i in 0..m {
        prog.set_objective(zs[i], 1.0);
        let user = dirs.selected[i];
        let vn = dirs.v_norm[i];
        let gain = (1.0 - 2.0 * cs.eps * vn) / (vn * vn * cs.sigma2[user]);
        // m_i >= e^(z_i), 1 + gain * P_i >= m_i, P_i >= 0
        prog.add_exponential(
            LinExpr::var(zs[i]),
            LinExpr::constant(1.0),
            LinExpr::var(ms[i]),
        );
        let mut cap = LinExpr::constant(1.0);
        cap.push(ps[i], gain);
        cap.push(ms[i], -1.0);
        prog.add_nonneg(cap);
        prog.add_nonneg(LinExpr::var(ps[i]));
    }
    let mut budget = LinExpr::constant(power);
    for &p in &ps {
        budget.push(p, -1.0);
    }
    prog.add_nonneg(budget);

    let res = solve(&prog, DEFAULT_TOL);
    if res.status != SolveStatus::Optimal {
        return Err(ZfError::Solver(format!("status {:?}", res.status)));
    }
    let cut = cutoffs(dirs, cs);
    let alloc_power: Vec<f64> = (0..m)
        .map(|i| {
            if cut[i].is_some() {
                res.primal[ps[i]].max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let active: Vec<bool> = alloc_power.iter().map(|&p| p > 1e-9 * power).collect();
    // Water level implied by the active users.
    let mut level = 0.0;
    let mut count = 0;
    for i in 0..m {
        if active[i] {
            level += alloc_power[i] + cut[i].unwrap();
            count += 1;
        }
    }
    let lambda = if count > 0 {
        count as f64 / level
    } else {
        f64::INFINITY
    };
    let no_eligible_user = cut.iter().all(Option::is_none);
    Ok(PowerAllocation {
        power: alloc_power,
        lambda,
        active,
        no_eligible_user,
    })
}

/// Subset selection strategy for `n_tx < 2K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Enumerate every size-`floor(n_tx/2)` subset and keep the best
    /// (ties: lexicographically lowest subset).
    Exhaustive,
    /// Rank the pairs by the contrast ratio `||h_i||^2 / ||g_i||^2` of the
    /// estimated channels and take the top ones, falling back to the
    /// next-ranked pair if a subset is rank-deficient.
    Heuristic,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance to the next lexicographic combination
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != pos + n - k {
                idx[pos] += 1;
                for j in (pos + 1)..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

fn evaluate_subset(cs: &ChannelSet, power: f64, subset: &[usize]) -> Result<f64, ZfError> {
    let dirs = zf_directions(cs, subset)?;
    let alloc = waterfill(&dirs, cs, power);
    Ok(zf_ssr(&dirs, &alloc, cs))
}

/// Choose the user subset of size `min(floor(n_tx/2), K)` to serve.
pub fn select_users(
    cs: &ChannelSet,
    power: f64,
    mode: SelectionMode,
) -> Result<(Vec<usize>, f64), ZfError> {
    let k_hat = (cs.n_tx / 2).min(cs.k_pairs);
    if k_hat == 0 {
        return Err(ZfError::Dimension {
            n_tx: cs.n_tx,
            needed: 2,
        });
    }
    match mode {
        SelectionMode::Exhaustive => {
            let mut best: Option<(Vec<usize>, f64)> = None;
            for combo in combinations(cs.k_pairs, k_hat) {
                // Rank-deficient subsets count as value -inf: skipped.
                let Ok(value) = evaluate_subset(cs, power, &combo) else {
                    continue;
                };
                match &best {
                    Some((_, b)) if value <= *b => {}
                    _ => best = Some((combo, value)),
                }
            }
            best.ok_or(ZfError::NoFeasibleSubset)
        }
        SelectionMode::Heuristic => {
            let mut ranked: Vec<usize> = (0..cs.k_pairs).collect();
            ranked.sort_by(|&a, &b| {
                let ua = cs.h_est[a].norm_squared() / cs.g_est[a].norm_squared();
                let ub = cs.h_est[b].norm_squared() / cs.g_est[b].norm_squared();
                ub.partial_cmp(&ua).unwrap().then(a.cmp(&b))
            });
            // Top-ranked subset first; on rank deficiency fall back through
            // the ranked list in lexicographic (rank-position) order.
            for combo in combinations(cs.k_pairs, k_hat) {
                let mut subset: Vec<usize> = combo.iter().map(|&r| ranked[r]).collect();
                subset.sort_unstable();
                if let Ok(value) = evaluate_subset(cs, power, &subset) {
                    return Ok((subset, value));
                }
            }
            Err(ZfError::NoFeasibleSubset)
        }
    }
}
