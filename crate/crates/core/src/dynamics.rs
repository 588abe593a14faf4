//! Euler–Maruyama integration of the middle particle, first-exit detection, and the
//! deterministic (noise-free) solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Frame, ModelParams};
use crate::rng::{run_trials, trial_rng};
use crate::scalar::Real;
use crate::stats::EstimateResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `x += drift dt + noise`.
    ExplicitEm,
    /// Drift linearised at the current point and treated implicitly.
    SemiImplicitEm,
}

/// How the first exit is located between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Crossing {
    /// Exit at the first grid point outside the domain.
    Grid,
    /// Linear interpolation of the path and the moving edge inside the exit step.
    LinearInterp,
    /// `LinearInterp`, plus a Brownian-bridge exit draw for steps whose end points are inside.
    BridgeCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    /// Left bond broke: `x` reached `b`.
    Left,
    /// Right bond broke: `x` reached `2a(1 + p(t)) - b`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub frame: Frame,
    /// Step in the chosen frame's time unit.
    pub dt: T,
    pub scheme: Scheme,
    pub crossing: Crossing,
    pub seed: u64,
    pub trial_index: u64,
}

impl<T: Real> IntegratorConfig<T> {
    /// Physical frame, explicit scheme, bridge-corrected crossings, default step.
    pub fn for_model(params: &ModelParams<T>) -> Self {
        Self {
            frame: Frame::Physical,
            dt: default_dt(params, Frame::Physical),
            scheme: Scheme::ExplicitEm,
            crossing: Crossing::BridgeCorrected,
            seed: 0,
            trial_index: 0,
        }
    }

    /// Switches frame and converts the step so that both frames cover the same rescaled time.
    pub fn in_frame(mut self, params: &ModelParams<T>, frame: Frame) -> Self {
        let rescaled = self.rescaled_step(params.epsilon());
        self.dt = match frame {
            Frame::Physical => rescaled / params.epsilon(),
            Frame::Rescaled => rescaled,
        };
        self.frame = frame;
        self
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_trial(mut self, trial_index: u64) -> Self {
        self.trial_index = trial_index;
        self
    }
    pub fn with_crossing(mut self, crossing: Crossing) -> Self {
        self.crossing = crossing;
        self
    }
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Step length measured in rescaled time.
    pub fn rescaled_step(&self, epsilon: T) -> T {
        match self.frame {
            Frame::Physical => self.dt * epsilon,
            Frame::Rescaled => self.dt,
        }
    }

    fn check(&self, params: &ModelParams<T>) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.dt)));
        }
        if self.scheme == Scheme::ExplicitEm {
            let limit = match self.frame {
                Frame::Physical => T::one() / params.stiffness(),
                Frame::Rescaled => params.epsilon() / params.stiffness(),
            };
            if self.dt >= limit {
                return Err(Error::InvalidParameter(format!(
                    "explicit step {} exceeds the stability limit {limit} (1/A1 in this frame)",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Default step: physical `min(0.01, 0.1/A1)`, converted to the requested frame.
pub fn default_dt<T: Real>(params: &ModelParams<T>, frame: Frame) -> T {
    let physical = T::lit(0.01).min(T::lit(0.1) / params.stiffness());
    match frame {
        Frame::Physical => physical,
        Frame::Rescaled => physical * params.epsilon(),
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakRecord<T> {
    /// Rescaled exit time, at most `t_close`.
    pub tau: T,
    pub side: Side,
    pub x_at_exit: T,
    pub steps: u64,
    /// Exit only resolved because the domain closed.
    pub capped: bool,
}

/// Bridge exit probabilities below `exp(-BRIDGE_CUTOFF)` are not drawn.
const BRIDGE_CUTOFF: f64 = 46.0;

#[inline]
fn interp_fraction<T: Real>(inside_start: T, inside_end: T) -> T {
    // both arguments are signed distances to the edge, positive inside
    inside_start / (inside_start - inside_end)
}

/// Integrates one trajectory, calling `observe(t, x)` at every grid point it visits.
pub fn simulate_trajectory_observed<T, F>(
    params: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    mut observe: F,
) -> Result<BreakRecord<T>>
where
    T: Real,
    F: FnMut(T, T),
{
    cfg.check(params)?;
    let eps = params.epsilon();
    let h = cfg.rescaled_step(eps);
    let dt = cfg.dt;
    let noise_sd = params.diffusion(cfg.frame) * dt.sqrt();
    let noise_var = noise_sd * noise_sd;
    let bridge = cfg.crossing == Crossing::BridgeCorrected && noise_var > T::zero();
    let cutoff = T::lit(BRIDGE_CUTOFF);
    let t_close = params.t_close();
    let b = params.upper_edge();
    let mut rng = trial_rng(cfg.seed, cfg.trial_index);

    let mut x = params.a();
    let mut n: u64 = 0;
    observe(T::zero(), x);
    loop {
        let t0 = T::from_u64(n).unwrap() * h;
        let t1 = T::from_u64(n + 1).unwrap() * h;
        if t1 > t_close {
            let side = if x > params.midpoint(t0) { Side::Left } else { Side::Right };
            return Ok(BreakRecord {
                tau: t_close,
                side,
                x_at_exit: b,
                steps: n,
                capped: true,
            });
        }
        let z = T::standard_normal(&mut rng);
        let drift = params.drift(x, t0, cfg.frame);
        let x1 = match cfg.scheme {
            Scheme::ExplicitEm => x + drift * dt + noise_sd * z,
            Scheme::SemiImplicitEm => {
                let g = params.drift_gradient(x, t0, cfg.frame);
                x + (drift * dt + noise_sd * z) / (T::one() - g * dt)
            }
        };
        n += 1;
        observe(t1, x1);

        // signed distances, positive while the chain is intact
        let r0 = x - params.lower_edge(t0);
        let r1 = x1 - params.lower_edge(t1);
        let l0 = b - x;
        let l1 = b - x1;
        let exit_right = r1 <= T::zero();
        let exit_left = l1 <= T::zero();

        if exit_right || exit_left {
            let side = match (exit_left, exit_right) {
                (true, false) => Side::Left,
                (false, true) => Side::Right,
                _ => {
                    // both edges passed within one step: earlier interpolated crossing wins
                    let fl = interp_fraction(l0, l1);
                    let fr = interp_fraction(r0, r1);
                    if fl < fr { Side::Left } else { Side::Right }
                }
            };
            return Ok(match cfg.crossing {
                Crossing::Grid => BreakRecord {
                    tau: t1,
                    side,
                    x_at_exit: x1,
                    steps: n,
                    capped: false,
                },
                Crossing::LinearInterp | Crossing::BridgeCorrected => {
                    let frac = match side {
                        Side::Left => interp_fraction(l0, l1),
                        Side::Right => interp_fraction(r0, r1),
                    };
                    let tau = t0 + frac.max(T::zero()).min(T::one()) * h;
                    BreakRecord {
                        tau,
                        side,
                        x_at_exit: edge_at(params, side, tau),
                        steps: n,
                        capped: false,
                    }
                }
            });
        }

        if bridge {
            // Brownian bridge between two interior points crosses a linear edge with
            // probability exp(-2 d0 d1 / var)
            let mut hit = |d0: T, d1: T| -> Option<T> {
                let expo = T::lit(2.0) * d0 * d1 / noise_var;
                if expo >= cutoff {
                    return None;
                }
                let p = (-expo).exp();
                (T::open01(&mut rng) < p).then_some(p)
            };
            let right = hit(r0, r1);
            let left = hit(l0, l1);
            let side = match (left, right) {
                (None, None) => None,
                (Some(_), None) => Some(Side::Left),
                (None, Some(_)) => Some(Side::Right),
                (Some(pl), Some(pr)) => Some(if pl > pr { Side::Left } else { Side::Right }),
            };
            if let Some(side) = side {
                let tau = t0 + h / T::lit(2.0);
                return Ok(BreakRecord {
                    tau,
                    side,
                    x_at_exit: edge_at(params, side, tau),
                    steps: n,
                    capped: false,
                });
            }
        }
        x = x1;
    }
}

fn edge_at<T: Real>(params: &ModelParams<T>, side: Side, t: T) -> T {
    match side {
        Side::Left => params.upper_edge(),
        Side::Right => params.lower_edge(t),
    }
}

/// Integrates one trajectory from `x(0) = a` until the chain breaks.
pub fn simulate_trajectory<T: Real>(
    params: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<BreakRecord<T>> {
    simulate_trajectory_observed(params, cfg, |_, _| {})
}

/// One sample of a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<T> {
    pub t: T,
    pub x: T,
    /// Position at which the right bond breaks, `2a(1 + p(t)) - b`.
    pub left_edge: T,
    /// Position at which the left bond breaks, `b`.
    pub right_edge: T,
}

/// Runs one trajectory and keeps every `thin`-th grid point (and the last one).
pub fn trace_trajectory<T: Real>(
    params: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    thin: usize,
) -> Result<(BreakRecord<T>, Vec<TracePoint<T>>)> {
    let thin = thin.max(1);
    let mut points = Vec::new();
    let mut last = None;
    let mut k = 0usize;
    let record = simulate_trajectory_observed(params, cfg, |t, x| {
        let p = TracePoint {
            t,
            x,
            left_edge: params.lower_edge(t),
            right_edge: params.upper_edge(),
        };
        if k.is_multiple_of(thin) {
            points.push(p);
            last = None;
        } else {
            last = Some(p);
        }
        k += 1;
    })?;
    points.extend(last);
    Ok((record, points))
}

/// Runs `n` independent trials (trial indices `0..n`) and estimates the probability of `side`.
pub fn estimate_side<T: Real>(
    params: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    n: u64,
    side: Side,
) -> Result<EstimateResult> {
    if n == 0 {
        return Err(Error::EmptyExperiment);
    }
    cfg.check(params)?;
    let records = run_trials(n, |i| simulate_trajectory(params, &cfg.with_trial(i)));
    let mut hits = 0;
    let mut capped = 0;
    for r in records {
        let r = r?;
        hits += u64::from(r.side == side);
        capped += u64::from(r.capped);
    }
    Ok(EstimateResult::from_counts(hits, n, capped, cfg.seed))
}

/// Left-break estimates of the same model integrated in the physical and in the rescaled frame.
pub fn equivalence_check<T: Real>(
    params: &ModelParams<T>,
    cfg_physical: &IntegratorConfig<T>,
    cfg_rescaled: &IntegratorConfig<T>,
    n: u64,
) -> Result<(EstimateResult, EstimateResult)> {
    if n == 0 {
        return Err(Error::EmptyExperiment);
    }
    if cfg_physical.frame != Frame::Physical || cfg_rescaled.frame != Frame::Rescaled {
        return Err(Error::InvalidParameter(
            "equivalence check needs one physical and one rescaled configuration".into(),
        ));
    }
    Ok((
        estimate_side(params, cfg_physical, n, Side::Left)?,
        estimate_side(params, cfg_rescaled, n, Side::Left)?,
    ))
}

// ---------------------------------------------------------------------------
// deterministic solution

/// Noise-free solution on a uniform grid over `[0, t_close]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicPath<T> {
    pub h: T,
    pub t: Vec<T>,
    pub x: Vec<T>,
    /// `dx/dt` at each grid point.
    pub velocity: Vec<T>,
}

impl<T: Real> DeterministicPath<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Grid cell containing `t` and the offset inside it.
    fn locate(&self, t: T) -> (usize, T) {
        let last = self.t.len() - 1;
        let s = (t / self.h).max(T::zero());
        let k = s.floor().to_usize().unwrap_or(last).min(last.saturating_sub(1));
        (k, t - self.t[k])
    }

    /// Cubic Hermite interpolation of `x_det` using the stored velocities.
    pub fn value_at(&self, t: T) -> T {
        if self.t.len() == 1 {
            return self.x[0];
        }
        let (k, dt) = self.locate(t);
        let h = self.h;
        let s = dt / h;
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let (v0, v1) = (self.velocity[k] * h, self.velocity[k + 1] * h);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        (two * s3 - three * s2 + T::one()) * x0
            + (s3 - two * s2 + s) * v0
            + (-two * s3 + three * s2) * x1
            + (s3 - s2) * v1
    }
}

/// Local error tolerance of the step-doubling monitor, relative to `b - a`.
const RK4_LOCAL_TOL: f64 = 1e-7;

/// Classical RK4 on `ε ẋ = F(x, t)` from `x(0) = a` over `[0, t_close]`.
///
/// The step is shrunk to divide the horizon exactly. Each step is checked against two half steps;
/// a step whose local error estimate exceeds the tolerance aborts the solve.
pub fn solve_deterministic<T: Real>(params: &ModelParams<T>, dt: T) -> Result<DeterministicPath<T>> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
    }
    let eps = params.epsilon();
    let t_close = params.t_close();
    let steps = (t_close / dt).ceil().to_usize().unwrap_or(1).max(1);
    let h = t_close / T::from_usize_lossy(steps);
    if h * params.stiffness() / eps > T::lit(2.5) {
        return Err(Error::Integration(format!(
            "step {h} is too large for stiffness {}/{eps}",
            params.stiffness()
        )));
    }
    let f = |x: T, t: T| params.force(x, t) / eps;
    let rk4 = |x: T, t: T, h: T| {
        let half = h / T::lit(2.0);
        let k1 = f(x, t);
        let k2 = f(x + half * k1, t + half);
        let k3 = f(x + half * k2, t + half);
        let k4 = f(x + h * k3, t + h);
        x + h / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4)
    };
    let tol = T::lit(RK4_LOCAL_TOL) * (params.b() - params.a());
    let a0 = params.potential().base().a0();

    let mut t = Vec::with_capacity(steps + 1);
    let mut x = Vec::with_capacity(steps + 1);
    let mut velocity = Vec::with_capacity(steps + 1);
    let mut xc = params.a();
    t.push(T::zero());
    x.push(xc);
    velocity.push(f(xc, T::zero()));
    for k in 0..steps {
        let t0 = T::from_usize_lossy(k) * h;
        let t1 = T::from_usize_lossy(k + 1) * h;
        let full = rk4(xc, t0, h);
        let halves = rk4(rk4(xc, t0, h / T::lit(2.0)), t0 + h / T::lit(2.0), h / T::lit(2.0));
        let err = (full - halves).abs() / T::lit(15.0);
        if !full.is_finite() || err > tol {
            return Err(Error::Integration(format!(
                "local error estimate {err} exceeds {tol} at t = {t0}; reduce the step"
            )));
        }
        xc = full;
        if !(xc > a0 && xc < params.right_endpoint(t1) - a0) {
            return Err(Error::ModelViolation(format!(
                "deterministic path left (a0, x_R - a0) at t = {t1} (x = {xc}); \
                 the pulling speed is too large for the convex regime"
            )));
        }
        t.push(t1);
        x.push(xc);
        velocity.push(f(xc, t1));
    }
    Ok(DeterministicPath { h, t, x, velocity })
}

/// How well the two first-order lag formulas describe a computed deterministic path.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionCheck {
    /// Start of the comparison window, after the initial transient.
    pub from_t: f64,
    /// `max |x_det - (a(1+p) - ε/Ũ''(a(1+p)))|`
    pub curvature_only_error: f64,
    /// `max |x_det - (a(1+p) - ε a p' / (2 Ũ''(a(1+p))))|`
    pub quasi_static_error: f64,
    /// `"quasi_static"`, `"curvature_only"` or `"tie"` (errors within 1% of each other).
    pub closer: &'static str,
}

/// Compares `x_det` against both first-order expansions of the lag behind the midpoint.
pub fn expansion_check<T: Real>(params: &ModelParams<T>, path: &DeterministicPath<T>) -> ExpansionCheck {
    let eps = params.epsilon();
    let a = params.a();
    let u = params.potential();
    // transient decays like exp(-2 u'' t / ε); skip 20 relaxation times or half the horizon
    let rate = T::lit(2.0) * u.curvature(a);
    let from = (T::lit(20.0) * eps / rate).min(params.t_close() / T::lit(2.0));
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for (&t, &x) in path.t.iter().zip(&path.x) {
        if t < from {
            continue;
        }
        let m = params.midpoint(t);
        let curv = u.curvature(m);
        let curvature_only = m - eps / curv;
        let quasi_static = m - eps * a * params.pull().rate(t) / (T::lit(2.0) * curv);
        e1 = e1.max((x - curvature_only).abs().to_f64_lossy());
        e2 = e2.max((x - quasi_static).abs().to_f64_lossy());
    }
    let closer = if (e1 - e2).abs() <= 0.01 * e1.max(e2) {
        "tie"
    } else if e2 < e1 {
        "quasi_static"
    } else {
        "curvature_only"
    };
    ExpansionCheck {
        from_t: from.to_f64_lossy(),
        curvature_only_error: e1,
        quasi_static_error: e2,
        closer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn reference_model(sigma: f64, epsilon: f64) -> ModelParams<f64> {
        let u = PotentialSpec::quadratic([1.0, -4.0, 3.0], 2.0, 3.0)
            .unwrap()
            .extend_default()
            .unwrap();
        ModelParams::new(u, sigma, epsilon).unwrap()
    }

    fn closed_form(t: f64, a: f64, eps: f64) -> f64 {
        a * (1.0 + t) - a * eps / 4.0 * (1.0 - (-4.0 * t / eps).exp())
    }

    #[test]
    fn deterministic_matches_closed_form() {
        let eps = 0.25;
        let m = reference_model(0.0, eps);
        let path = solve_deterministic(&m, eps / 100.0).unwrap();
        assert_eq!(path.x[0], 2.0);
        assert_eq!(*path.t.last().unwrap(), 0.5);
        let err = path
            .t
            .iter()
            .zip(&path.x)
            .map(|(&t, &x)| (x - closed_form(t, 2.0, eps)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "max error {err}");
        for (&t, &x) in path.t.iter().zip(&path.x).skip(1) {
            assert!(x < 2.0 * (1.0 + t));
        }
        // interpolation between grid points
        let t = 0.123_456;
        assert!((path.value_at(t) - closed_form(t, 2.0, eps)).abs() < 1e-8);
    }

    #[test]
    fn deterministic_rejects_oversized_steps() {
        let m = reference_model(0.0, 0.01);
        assert!(matches!(solve_deterministic(&m, 0.01), Err(Error::Integration(_))));
    }

    #[test]
    fn noiseless_trajectory_breaks_right() {
        let eps = 0.25;
        let m = reference_model(0.0, eps);
        let cfg = IntegratorConfig::for_model(&m).with_crossing(Crossing::LinearInterp);
        let rec = simulate_trajectory(&m, &cfg).unwrap();
        assert_eq!(rec.side, Side::Right);
        assert!(!rec.capped);
        assert!(rec.tau <= m.t_close());
        assert!((rec.x_at_exit - m.lower_edge(rec.tau)).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_record() {
        let m = reference_model(0.05, 0.25);
        let cfg = IntegratorConfig::for_model(&m).with_seed(11).with_trial(4);
        let r1 = simulate_trajectory(&m, &cfg).unwrap();
        let r2 = simulate_trajectory(&m, &cfg).unwrap();
        assert_eq!(r1, r2);
        let r3 = simulate_trajectory(&m, &cfg.with_trial(5)).unwrap();
        assert_ne!(r1.tau, r3.tau);
    }

    #[test]
    fn unstable_explicit_step_rejected() {
        let m = reference_model(0.01, 0.25);
        let cfg = IntegratorConfig::for_model(&m).with_dt(0.3);
        assert!(simulate_trajectory(&m, &cfg).is_err());
        // the linearly implicit scheme has no such restriction
        let cfg = cfg.with_scheme(Scheme::SemiImplicitEm);
        assert!(simulate_trajectory(&m, &cfg).is_ok());
    }

    #[test]
    fn capped_when_step_overshoots_closure() {
        // a step larger than the whole horizon leaves no room for a regular exit
        let m = reference_model(0.0, 0.25);
        let cfg = IntegratorConfig::for_model(&m)
            .in_frame(&m, Frame::Rescaled)
            .with_dt(0.6)
            .with_scheme(Scheme::SemiImplicitEm);
        let rec = simulate_trajectory(&m, &cfg).unwrap();
        assert!(rec.capped);
        assert_eq!(rec.tau, 0.5);
        assert_eq!(rec.steps, 0);
        // x = a sits on the midpoint at t = 0: the tie goes right
        assert_eq!(rec.side, Side::Right);
    }

    #[test]
    fn trace_keeps_endpoints() {
        let m = reference_model(0.01, 0.25);
        let cfg = IntegratorConfig::for_model(&m);
        let (rec, pts) = trace_trajectory(&m, &cfg, 7).unwrap();
        assert_eq!(pts[0].t, 0.0);
        assert_eq!(pts[0].x, 2.0);
        assert!(pts.len() >= 2);
        let last = pts.last().unwrap();
        assert!(last.t >= rec.tau - cfg.rescaled_step(0.25));
        assert!(pts.iter().all(|p| p.right_edge == 3.0));
    }

    #[test]
    fn empty_experiment_rejected() {
        let m = reference_model(0.01, 0.25);
        let cfg = IntegratorConfig::for_model(&m);
        let r = cfg.in_frame(&m, Frame::Rescaled);
        assert!(matches!(equivalence_check(&m, &cfg, &r, 0), Err(Error::EmptyExperiment)));
    }

    #[test]
    fn expansion_check_identifies_quasi_static_lag() {
        // a = 1.5, b = 2.5, U'' = 2: quasi-static lag aε/4 differs from ε/2
        let u = PotentialSpec::quadratic([1.0, -3.0, 2.25 - 1.0], 1.5, 2.5)
            .unwrap()
            .extend_default()
            .unwrap();
        let m = ModelParams::new(u, 0.0, 0.01).unwrap();
        let path = solve_deterministic(&m, 0.0001).unwrap();
        let check = expansion_check(&m, &path);
        assert_eq!(check.closer, "quasi_static");
        assert!(check.quasi_static_error < 1e-9);
        // reference example: both formulas coincide
        let m = reference_model(0.0, 0.01);
        let path = solve_deterministic(&m, 0.0001).unwrap();
        assert_eq!(expansion_check(&m, &path).closer, "tie");
    }
}
