mod common;

use breakchain::deviation::{build_linearization, variance_data};
use breakchain::dynamics::{estimate_side, simulate_trajectory};
use breakchain::{Crossing, Frame, IntegratorConfig, Side};
use common::{reference_model, quartic_model};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_is_antisymmetric_about_midpoint(t in 0.0..0.5f64, frac in 0.0..1.0f64, quartic in any::<bool>()) {
        let m = if quartic { quartic_model(0.01, 0.1) } else { reference_model(0.01, 0.1) };
        let mid = m.midpoint(t);
        let half = (m.upper_edge() - m.lower_edge(t)) / 2.0;
        let delta = frac * half;
        for frame in [Frame::Physical, Frame::Rescaled] {
            let up = m.drift(mid + delta, t, frame);
            let down = m.drift(mid - delta, t, frame);
            prop_assert!((up + down).abs() <= 1e-9 * (1.0 + up.abs()), "{up} vs {down}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences(y in 0.05..3.45f64, quartic in any::<bool>()) {
        let m = if quartic { quartic_model(0.0, 0.1) } else { reference_model(0.0, 0.1) };
        let u = m.potential();
        let h = 1e-5;
        let fd1 = (u.value(y + h) - u.value(y - h)) / (2.0 * h);
        let fd2 = (u.slope(y + h) - u.slope(y - h)) / (2.0 * h);
        prop_assert!((fd1 - u.slope(y)).abs() < 1e-6 * (1.0 + u.slope(y).abs()));
        prop_assert!((fd2 - u.curvature(y)).abs() < 1e-5 * (1.0 + u.curvature(y).abs()));
        prop_assert_eq!(u.slope(-y), -u.slope(y));
        prop_assert_eq!(u.curvature(-y), u.curvature(y));
    }

    #[test]
    fn alpha_is_sandwiched(s_frac in 0.0..1.0f64, len_frac in 0.0..1.0f64, eps in 0.01..0.5f64) {
        let m = quartic_model(0.0, eps);
        let lin = build_linearization(&m, eps / 40.0).unwrap();
        let s = s_frac * 0.5;
        let t = s + len_frac * (0.5 - s);
        let al = lin.alpha(t, s);
        prop_assert!(al <= -lin.a0 * (t - s) + 1e-12);
        prop_assert!(al >= -lin.a1 * (t - s) - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn variance_residual_is_first_order(eps in 0.005..0.5f64) {
        let m = reference_model(0.01, eps);
        let res = |dt: f64| {
            let lin = build_linearization(&m, dt).unwrap();
            variance_data(&lin).unwrap().ode_residual(&lin)
        };
        let coarse = res(eps / 20.0);
        let fine = res(eps / 40.0);
        prop_assert!(fine < 0.6 * coarse, "{coarse} -> {fine}");
    }

    #[test]
    fn exit_time_converges_under_step_halving(eps in 0.001..0.5f64, quartic in any::<bool>()) {
        let m = if quartic { quartic_model(0.0, eps) } else { reference_model(0.0, eps) };
        let cfg = IntegratorConfig::for_model(&m).with_crossing(Crossing::LinearInterp);
        let half = cfg.with_dt(cfg.dt / 2.0);
        let a = simulate_trajectory(&m, &cfg).unwrap();
        let b = simulate_trajectory(&m, &half).unwrap();
        prop_assert_eq!(a.side, Side::Right);
        prop_assert_eq!(b.side, Side::Right);
        prop_assert!((a.tau - b.tau).abs() <= 2.0 * cfg.rescaled_step(eps));
    }

    #[test]
    fn break_happens_before_closure(sigma in 0.0..0.1f64, eps in 0.001..0.5f64, seed in any::<u64>()) {
        let m = reference_model(sigma, eps);
        let rec = simulate_trajectory(&m, &IntegratorConfig::for_model(&m).with_seed(seed)).unwrap();
        prop_assert!(rec.tau <= m.t_close());
    }

    #[test]
    fn estimates_do_not_depend_on_pool_size(seed in any::<u64>(), threads in 2usize..5) {
        let m = reference_model(0.02, 0.05);
        let cfg = IntegratorConfig::for_model(&m).with_seed(seed);
        let run = || estimate_side(&m, &cfg, 40, Side::Left).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let many = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(run);
        prop_assert_eq!(one, many);
    }
}

fn closed_form_break_time(eps: f64) -> f64 {
    let gap = |t: f64| 4.0 * (1.0 + t) - (2.0 * (1.0 + t) - eps / 2.0 * (1.0 - (-4.0 * t / eps).exp())) - 3.0;
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn interpolated_crossing_beats_grid_crossing() {
    for eps in [0.25, 0.05, 0.01, 1e-3] {
        let m = reference_model(0.0, eps);
        let root = closed_form_break_time(eps);
        let base = IntegratorConfig::for_model(&m);
        for dt in [base.dt, base.dt / 2.0] {
            let cfg = base.with_dt(dt);
            let h = cfg.rescaled_step(eps);
            let err = |crossing| (simulate_trajectory(&m, &cfg.with_crossing(crossing)).unwrap().tau - root).abs();
            let grid = err(Crossing::Grid);
            let interp = err(Crossing::LinearInterp);
            assert!(grid <= 2.0 * h, "eps={eps}, dt={dt}: grid error {grid} vs step {h}");
            assert!(interp <= 0.05 * h, "eps={eps}, dt={dt}: interpolated error {interp} vs step {h}");
        }
    }
}
