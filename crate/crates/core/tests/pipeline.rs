//! Cross-module integration: channel draws flow through each design and the
//! rate evaluations agree with the designs' own reduced objectives.

use ssrmax_core::channel::{sample_channel_set, sample_true_instance, RngStream};
use ssrmax_core::rates::{ssr_exact, ssr_lower_bound};
use ssrmax_core::sca::{run_sca, ScaConfig};
use ssrmax_core::slnr::slnr_beamformers;
use ssrmax_core::zf::{assemble_beamformers, waterfill, zf_directions, zf_ssr};

#[test]
fn zf_reduced_objective_equals_lower_bound_ssr() {
    // With every eavesdropper and cross-user term nulled, the lower-bound
    // SSR of the assembled beamformers collapses to the reduced objective,
    // for any eps (not just 0): all nulled quadratic forms carry zero norm
    // terms too.
    let mut rng = RngStream::new(201, 0);
    for trial in 0..20 {
        let eps = 0.05 * (trial % 6) as f64;
        let cs = sample_channel_set(8, 3, eps, vec![1.0; 3], vec![1.0; 3], &mut rng).unwrap();
        let dirs = zf_directions(&cs, &[0, 1, 2]).unwrap();
        let alloc = waterfill(&dirs, &cs, 10.0);
        let reduced = zf_ssr(&dirs, &alloc, &cs);
        let bf = assemble_beamformers(&cs, &dirs, &alloc, 10.0);
        let lb = ssr_lower_bound(&cs, &bf);
        assert!(
            (reduced - lb.bits).abs() < 1e-9,
            "trial {trial}: reduced {reduced} vs lower bound {}",
            lb.bits
        );
        assert!(!lb.degenerate);
    }
}

#[test]
fn sca_pipeline_end_to_end() {
    let mut rng = RngStream::new(202, 0);
    let cs = sample_channel_set(4, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();
    let cfg = ScaConfig::default();
    let out = run_sca(&cs, 10.0, &cfg, &mut rng).unwrap();

    assert!(
        out.covariances.validate(10.0),
        "relaxed covariances violate PSD/power"
    );
    assert!(out.beamformers.total_power() <= 10.0 * (1.0 + 1e-9));
    assert!(out.beamformer_value_bits <= out.relaxed_value_bits + 1e-6);
    assert_eq!(out.trace.len(), out.iterations);
    assert_eq!(out.residual_trace.len(), out.iterations);

    let csv = out.trace_csv();
    assert!(csv.starts_with("iter,objective_bits,max_constraint_residual\n"));
    assert_eq!(csv.lines().count(), out.iterations + 1);

    // The practical SSR on an in-ball true channel stays close to the
    // optimized bound (no formal guarantee, but a collapse would signal a
    // wiring bug between the modules).
    let inst = sample_true_instance(&cs, &mut rng);
    let practical = ssr_exact(
        &inst.h_true,
        &inst.g_true,
        &cs.sigma2,
        &cs.varsigma2,
        &out.beamformers,
    );
    assert!(practical > 0.0, "practical SSR collapsed: {practical}");
}

#[test]
fn all_three_methods_produce_feasible_designs() {
    let mut rng = RngStream::new(203, 0);
    let p = 5.0;
    let cs = sample_channel_set(4, 2, 0.1, vec![1.0; 2], vec![1.0; 2], &mut rng).unwrap();

    let sca = run_sca(&cs, p, &ScaConfig::default(), &mut rng)
        .unwrap()
        .beamformers;
    let dirs = zf_directions(&cs, &[0, 1]).unwrap();
    let zf = assemble_beamformers(&cs, &dirs, &waterfill(&dirs, &cs, p), p);
    let slnr = slnr_beamformers(&cs, p);

    for (name, bf) in [("sca", &sca), ("zf", &zf), ("slnr", &slnr)] {
        assert!(
            bf.total_power() <= p * (1.0 + 1e-9),
            "{name} exceeds the budget"
        );
        assert_eq!(bf.w.len(), 2, "{name} must produce one beamformer per pair");
        let lb = ssr_lower_bound(&cs, bf);
        assert!(lb.bits.is_finite(), "{name} lower bound not finite");
    }
}
