//! End-to-end checks on the worked phase-2 → phase-3 configuration.

use powercd::binom_model::TwoArmCounts;
use powercd::combine;
use powercd::design_aux::{self, ElicitationSummary, ShiftEstimate};
use powercd::grid::ParamGrid;
use powercd::pos;
use powercd::power::{self, PowerTransform};
use powercd::presets::{self, CTRL_RATE};
use powercd::pvfn::{self, confidence_density, upper_pvfn_lrt, upper_pvfn_wald, WaldLink};
use powercd::simlab;

fn grid() -> ParamGrid {
    ParamGrid::default_theta()
}

#[test]
fn minimal_successes_are_just_significant() {
    let p3 = presets::phase3_design();
    let c3 = presets::success_counts(&p3, presets::PHASE3_SUCCESS_EFFECT).unwrap();
    let v3 = pvfn::lrt_upper_pvalue(&c3, -0.12).unwrap();
    assert!(v3 > 0.021 && v3 < 0.025, "phase-3 p-value {v3}");

    let p2 = presets::phase2_design();
    let c2 = presets::success_counts(&p2, presets::PHASE2_SUCCESS_EFFECT).unwrap();
    let v2 = pvfn::lrt_upper_pvalue(&c2, -0.05).unwrap();
    assert!(v2 > 0.19 && v2 < 0.20, "phase-2 p-value {v2}");
}

#[test]
fn phase3_power_given_phase2_success() {
    let g = grid();
    let c2 = presets::success_counts(&presets::phase2_design(), presets::PHASE2_SUCCESS_EFFECT).unwrap();
    let h = upper_pvfn_lrt(&c2, &g).unwrap();
    let pc3 = power::power_curve(&presets::phase3_design(), CTRL_RATE, &g).unwrap();
    let s = pos::summarize(&h, &pc3, None).unwrap();
    assert!((s.mle - 0.959).abs() <= 0.005, "mle {}", s.mle);
    assert!((s.pos - 0.781).abs() <= 0.01, "pos {}", s.pos);
    assert!(!s.truncated);
    let hp = power::power_pvfn(&h, &pc3).unwrap();
    let p = hp.at(0.5).unwrap();
    assert!((p - 0.200).abs() <= 0.005, "p-value for power <= 0.5: {p}");
}

#[test]
fn power_curve_anchors() {
    let g = grid();
    let pc3 = power::power_curve(&presets::phase3_design(), CTRL_RATE, &g).unwrap();
    for (theta, want, tol) in [(-0.12, 0.025, 0.002), (-0.05, 0.50, 0.02), (0.0, 0.91, 0.01)] {
        let b = pc3.at(theta).unwrap();
        assert!((b - want).abs() <= tol, "phase-3 power at {theta}: {b}");
    }
    let pc2 = power::power_curve(&presets::phase2_design(), CTRL_RATE, &g).unwrap();
    for (theta, want, tol) in [(-0.12, 0.034, 0.005), (0.0, 0.428, 0.015)] {
        let b = pc2.at(theta).unwrap();
        assert!((b - want).abs() <= tol, "phase-2 power at {theta}: {b}");
    }
    assert!(pc3.is_nondecreasing() && pc2.is_nondecreasing());
}

#[test]
fn elicited_evidence_is_a_proper_distribution() {
    let e = ElicitationSummary::from_active_size(
        presets::ELICITED_MEAN,
        CTRL_RATE,
        presets::ELICITED_N_CTRL,
        presets::ELICITED_N_ACTIVE,
    )
    .unwrap();
    let n = design_aux::effective_n_active(&e).unwrap();
    assert!((n - presets::ELICITED_N_ACTIVE).abs() < 1e-6, "{n}");

    let h = upper_pvfn_lrt(&presets::elicited_counts(), &grid()).unwrap();
    let d = confidence_density(&h);
    assert!((d.mass() - 1.0).abs() < 0.02, "mass {}", d.mass());
    assert!((h.median().unwrap() - presets::ELICITED_MEAN).abs() <= grid().step());
}

#[test]
fn conditioning_curves_are_ordered() {
    let f = presets::conditioning_curves(&grid()).unwrap();
    let m_elicited = f.elicited.median().unwrap();
    let m_phase2 = f.phase2_power.median().unwrap();
    let m_conv = f.convolved.median().unwrap();
    let m_mult = f.multiplied.median().unwrap();
    let (lo, hi) = (m_elicited.min(m_phase2), m_elicited.max(m_phase2));
    assert!(
        m_conv > lo && m_conv < hi,
        "convolution median {m_conv} outside ({lo}, {hi})"
    );
    // A product of two distribution functions is the distribution of the
    // larger of two draws, so its median sits right of both inputs' medians
    // and therefore right of the pooled estimate.
    assert!(m_mult >= hi - grid().step(), "multiply {m_mult}, inputs ({lo}, {hi})");
    assert!(m_mult > m_conv, "multiply {m_mult}, convolve {m_conv}");
    // Clamping only touches far-tail cells whose value is within 1e-12 of 0 or 1.
    let outside = |v: &f64| !(combine::CLAMP..=1.0 - combine::CLAMP).contains(v);
    let expected = f.elicited.values().iter().filter(|v| outside(v)).count()
        + f.phase2_power.values().iter().filter(|v| outside(v)).count();
    assert_eq!(f.convolution_clamped, expected);

    let var = |h: &pvfn::PValueFunction| confidence_density(h).normalized().unwrap().variance().unwrap();
    let v_conv = var(&f.convolved);
    assert!(v_conv <= var(&f.elicited).min(var(&f.phase2_power)) + 1e-9);
}

#[test]
fn conditioning_on_phase2_success() {
    let g = grid();
    let h = upper_pvfn_lrt(&presets::elicited_counts(), &g).unwrap();
    let pc2 = power::power_curve(&presets::phase2_design(), CTRL_RATE, &g).unwrap();
    let pc3 = power::power_curve(&presets::phase3_design(), CTRL_RATE, &g).unwrap();
    let s = pos::summarize(&h, &pc3, Some(&pc2)).unwrap();
    let (cond, mult) = (s.conditional_pos.unwrap(), s.multiplied_pos.unwrap());
    // The product route differentiates H·β₂, which adds the term H·β₂' and
    // moves mass toward larger effects; it can only exceed the pre-posterior.
    assert!(mult > cond, "pre-posterior {cond} vs multiplied {mult}");
    assert!(cond > s.pos, "success in phase 2 should raise the outlook");

    let joint = pos::joint_pos(&h, &pc2, &pc3).unwrap();
    assert!(joint < s.pos);
    let p2 = pos::pos(&h, &pc2).unwrap();
    // P(both succeed) = P(phase 2 succeeds) · P(phase 3 succeeds | phase 2 did).
    assert!((joint - p2 * cond).abs() < 1e-9, "{joint} vs {}", p2 * cond);
    let d = pos::conditional_density(&h, &pc2).unwrap();
    assert!((d.mass() - 1.0).abs() < 1e-6);
}

#[test]
fn pos_converges_under_refinement() {
    let c2 = presets::success_counts(&presets::phase2_design(), presets::PHASE2_SUCCESS_EFFECT).unwrap();
    let mut prev = None;
    for factor in [1usize, 2, 4] {
        let g = ParamGrid::new(-0.4, 0.4, 5e-4).unwrap().refined(factor).unwrap();
        let h = upper_pvfn_lrt(&c2, &g).unwrap();
        let pc3 = power::power_curve(&presets::phase3_design(), CTRL_RATE, &g).unwrap();
        let p = pos::pos(&h, &pc3).unwrap();
        if let Some(q) = prev {
            let diff: f64 = p - q;
            assert!(diff.abs() < 1e-3, "step {} → PoS moved {diff}", g.step());
        }
        prev = Some(p);
    }
}

#[test]
fn delta_gradients_are_stable_under_refinement() {
    let d = presets::phase3_design();
    for theta in [-0.1, -0.05, 0.0, 0.03] {
        for ctrl in [0.3, 0.43, 0.6] {
            let (a1, b1) = power::probit_power_gradient(&d, theta, ctrl, 1e-4).unwrap();
            let (a2, b2) = power::probit_power_gradient(&d, theta, ctrl, 1e-5).unwrap();
            assert!(
                (a1 - a2).abs() <= 1e-4 * a2.abs().max(1e-8),
                "theta gradient {a1} vs {a2}"
            );
            assert!(
                (b1 - b2).abs() <= 1e-4 * b2.abs().max(1e-3),
                "ctrl gradient {b1} vs {b2}"
            );
        }
    }
}

#[test]
fn pushforward_and_delta_intervals_agree_on_scenario_data() {
    let g = presets::simulation_grid();
    let p3 = presets::phase3_design();
    let pc3 = power::power_curve(&p3, CTRL_RATE, &g).unwrap();
    for cfg in presets::table1_configs(200, 11) {
        let interval_gap = |c: &TwoArmCounts, pc: &power::PowerCurve| {
            let push = power::power_pvfn(&upper_pvfn_lrt(c, &g).unwrap(), pc)
                .unwrap()
                .interval(0.6)
                .unwrap();
            let delta = power::delta_wald_power(c, &p3, PowerTransform::Probit)
                .unwrap()
                .interval(0.6)
                .unwrap();
            (push.0 - delta.0).abs().max((push.1 - delta.1).abs())
        };
        // Noise-free phase-2 data at the scenario's truth.
        let expected = cfg
            .phase2
            .expected_counts(CTRL_RATE, CTRL_RATE + cfg.true_theta)
            .unwrap();
        let gap = interval_gap(&expected, &pc3);
        assert!(gap < 0.02, "{}: endpoint gap {gap}", cfg.name);

        // Simulated replicates, each route plugging in its own control estimate.
        let mut gaps: Vec<f64> = (0..cfg.reps as u64)
            .map(|i| {
                let c = simlab::simulate_phase2(&cfg, i).unwrap();
                interval_gap(&c, &power::power_curve(&p3, c.ctrl_rate(), &g).unwrap())
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        let median = gaps[gaps.len() / 2];
        assert!(median < 0.02, "{}: median replicate gap {median}", cfg.name);
    }
}

#[test]
fn higher_phase3_sample_sizes_raise_power() {
    let g = grid();
    let c2 = presets::success_counts(&presets::phase2_design(), presets::PHASE2_SUCCESS_EFFECT).unwrap();
    let h = upper_pvfn_lrt(&c2, &g).unwrap();
    let sizes: Vec<f64> = (1..=8).map(|i| 100.0 * i as f64).collect();
    let rows = power::sample_size_sweep(&h, -0.12, 0.025, CTRL_RATE, &sizes, 0.8).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].estimate >= w[0].estimate);
        assert!(w[1].mde < w[0].mde);
    }
    for r in &rows {
        assert!(r.lower <= r.estimate && r.estimate <= r.upper, "{r:?}");
    }
}

#[test]
fn shifting_the_control_group_brackets_power() {
    let g = grid();
    let c2 = presets::success_counts(&presets::phase2_design(), presets::PHASE2_SUCCESS_EFFECT).unwrap();
    let h = upper_pvfn_lrt(&c2, &g).unwrap();
    let pc3 = power::power_curve(&presets::phase3_design(), CTRL_RATE, &g).unwrap();
    let shift = ShiftEstimate::new(0.01, -0.01, 0.03).unwrap();
    let band = design_aux::extrapolated_power_curve(&pc3, &shift).unwrap();
    assert!(band.is_ordered());
    let bp = design_aux::extrapolated_power_pvfn(&h, &pc3, &shift).unwrap();
    let (hi, mid, lo) = (
        bp.at_delta_lo.pos().unwrap(),
        bp.center.pos().unwrap(),
        bp.at_delta_hi.pos().unwrap(),
    );
    assert!(lo <= mid && mid <= hi, "{lo} {mid} {hi}");
}

#[test]
fn wald_and_lrt_agree_at_moderate_sizes() {
    let g = grid();
    let p3 = presets::phase3_design();
    let mut cases = vec![presets::success_counts(&p3, presets::PHASE3_SUCCESS_EFFECT).unwrap()];
    for n in [90.0, 200.0, 365.0] {
        for (rc, ra) in [(0.43, 0.43), (0.3, 0.35), (0.6, 0.55), (0.45, 0.3)] {
            cases.push(TwoArmCounts::new(rc * n, n, ra * n, n).unwrap());
        }
    }
    for c in &cases {
        let lrt = upper_pvfn_lrt(c, &g).unwrap();
        let wald = upper_pvfn_wald(c, &g, WaldLink::Identity).unwrap();
        let gap = lrt
            .values()
            .iter()
            .zip(wald.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 0.01, "{c:?}: {gap}");
        assert!(wald.values().windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn and_or_combinations_bracket_their_inputs() {
    let g = grid();
    let a = upper_pvfn_lrt(&presets::elicited_counts(), &g).unwrap();
    let c2 = presets::success_counts(&presets::phase2_design(), presets::PHASE2_SUCCESS_EFFECT).unwrap();
    let b = upper_pvfn_lrt(&c2, &g).unwrap();
    let and = combine::multiply(&a, &b).unwrap();
    let (la, lb) = (pvfn::lower_pvfn(&a), pvfn::lower_pvfn(&b));
    let or = combine::or_combine(&la, &lb).unwrap();
    for i in 0..g.len() {
        let (x, y) = (a.values()[i], b.values()[i]);
        assert!(and.values()[i] <= x.min(y) + 1e-15);
        let (lx, ly) = (la.values()[i], lb.values()[i]);
        assert!(or.values()[i] >= lx.max(ly) - 1e-15);
    }
}
