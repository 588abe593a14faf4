mod common;

use breakchain::deviation::{boundary_curves, build_linearization, variance_data};
use breakchain::dynamics::estimate_side;
use breakchain::experiments::{
    conditional_hit_experiment, corridor_experiment, martingale_sup_experiment, proof_corridor_width,
    sup_bound_experiment, sweep, tau_l_experiment,
};
use breakchain::{IntegratorConfig, Scheme, Side};
use common::{reference_model, quartic_model};

const SLOW: (f64, f64) = (0.02, 5e-4);

#[test]
fn left_break_probability_rises_as_pulling_slows() {
    let base = reference_model(0.02, 0.25);
    let eps = [0.25, 0.05, 0.01, 0.002, 5e-4];
    let rows = sweep(&base, &[0.02], &eps, &IntegratorConfig::for_model(&base), None, 400, 3.0, true).unwrap();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        let (fast, slow) = (&w[0], &w[1]);
        assert!(slow.epsilon < fast.epsilon);
        let se = (fast.p_left * (1.0 - fast.p_left) / 400.0 + slow.p_left * (1.0 - slow.p_left) / 400.0).sqrt();
        assert!(slow.p_left >= fast.p_left - 2.0 * se, "{fast:?} -> {slow:?}");
    }
    assert!(rows[0].p_left < 0.01);
    assert!(rows[4].p_left > 0.35);
}

#[test]
fn corridor_bound_dominates_with_varying_curvature() {
    let (sigma, eps) = (0.02, 0.05);
    let m = quartic_model(sigma, eps);
    let lin = build_linearization(&m, eps / 50.0).unwrap();
    let var = variance_data(&lin).unwrap();
    for ratio in [2.0, 3.0, 4.0] {
        let out = corridor_experiment(&lin, &var, sigma, ratio * sigma, 0.5, 2000, Scheme::ExplicitEm, 21).unwrap();
        assert!(out.empirical.p_hat <= out.bound, "{out:?}");
    }
}

#[test]
fn martingale_tail_respects_bound() {
    for (delta, integrand) in [(0.5, 1.0), (1.0, 0.7), (2.0, 1.3)] {
        let out = martingale_sup_experiment(|t| integrand * (1.0 + t).sqrt(), 1.0, delta, 200, 4000, 8).unwrap();
        // left-point sum of c²(1+t) on 200 steps
        let qv = integrand * integrand * (1.5 - 0.5 / 200.0);
        assert!((out.quadratic_variation - qv).abs() < 1e-12 * qv);
        assert!(out.empirical.ci_low <= out.bound, "{out:?}");
    }
}

#[test]
fn upper_crossing_after_first_approach_strengthens_as_noise_shrinks() {
    let mut previous = 0.0;
    for sigma in [0.02f64, 0.01] {
        let eps = 1.25 * sigma * sigma;
        let m = reference_model(sigma, eps);
        let lin = build_linearization(&m, eps / 50.0).unwrap();
        let curves = boundary_curves(&m, lin.path()).unwrap();
        let f = sigma.ln().abs().sqrt();
        let t_star = 0.5 - sigma * f / 2.0;
        let delta = eps / (4.0 * f * f);
        let out = conditional_hit_experiment(&lin, &curves, sigma, 0.0, t_star, delta, 2000, Scheme::ExplicitEm, 4)
            .unwrap();
        assert!(out.crosses_upper.p_hat > 0.5, "{out:?}");
        assert!(out.crosses_upper.p_hat > previous, "{out:?}");
        assert!(out.goes_negative.p_hat < 0.01);
        previous = out.crosses_upper.p_hat;
    }
}

#[test]
fn noiseless_runs_never_break_left() {
    for eps in [0.25, 5e-3] {
        let m = reference_model(0.0, eps);
        let est = estimate_side(&m, &IntegratorConfig::for_model(&m), 20, Side::Left).unwrap();
        assert_eq!(est.p_hat, 0.0);
    }
}

#[test]
fn full_deviation_stays_in_corridor() {
    let (sigma, eps) = SLOW;
    let m = reference_model(sigma, eps);
    let lin = build_linearization(&m, eps / 50.0).unwrap();
    let d = proof_corridor_width(sigma, eps);
    let slow = sup_bound_experiment(&lin, sigma, d, 500, Scheme::ExplicitEm, 31).unwrap();
    assert!(slow.p_hat < 0.05, "{slow:?}");

    let (sigma, eps) = (0.01, 0.25);
    let m = reference_model(sigma, eps);
    let lin = build_linearization(&m, eps / 50.0).unwrap();
    let curves = breakchain::deviation::boundary_curves(&m, lin.path()).unwrap();
    let d = *curves.d_plus.last().unwrap();
    let fast = sup_bound_experiment(&lin, sigma, d, 1000, Scheme::ExplicitEm, 32).unwrap();
    assert!(fast.p_hat < 0.01, "{fast:?}");
}

#[test]
fn first_approach_picks_either_envelope_evenly() {
    let (sigma, eps) = SLOW;
    let m = reference_model(sigma, eps);
    let lin = build_linearization(&m, eps / 50.0).unwrap();
    let curves = boundary_curves(&m, lin.path()).unwrap();
    let out = tau_l_experiment(&lin, &curves, sigma, 0.0, sigma.ln().abs(), 2000, 20, Scheme::ExplicitEm, 41)
        .unwrap();
    assert!(out.upper_first.interval(3.0).0 <= 0.5 && 0.5 <= out.upper_first.interval(3.0).1, "{out:?}");
}

#[test]
fn early_first_approach_vanishes_as_noise_shrinks() {
    let mut early = Vec::new();
    for sigma in [0.04f64, 0.02, 0.01] {
        let eps = 1.25 * sigma * sigma;
        let m = reference_model(sigma, eps);
        let lin = build_linearization(&m, eps / 50.0).unwrap();
        let curves = boundary_curves(&m, lin.path()).unwrap();
        let out = tau_l_experiment(&lin, &curves, sigma, 0.0, sigma.ln().abs(), 1000, 10, Scheme::ExplicitEm, 42)
            .unwrap();
        early.push(out.before_window.p_hat);
    }
    assert!(early.iter().all(|&p| p < 0.01), "{early:?}");
}
