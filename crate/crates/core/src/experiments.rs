//! Monte Carlo experiments: break-side estimates in the two stretching regimes, and empirical
//! checks of the estimates used to control the deviation process.

use std::ops::ControlFlow;

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::deviation::{
    simulate_x_path, walk_linear, BoundaryCurves, LinearizationData, NoiseStream, VarianceData,
};
use crate::dynamics::{default_dt, estimate_side, IntegratorConfig, Scheme, Side};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{run_trials, trial_rng};
use crate::scalar::Real;
use crate::stats::EstimateResult;

pub const DEFAULT_MARGIN: f64 = 3.0;

/// Attached to outputs of runs that fall between the two regimes.
pub const OPEN_PROBLEM_MARKER: &str = "open problem - no theoretical prediction";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    Fast,
    Slow,
    Intermediate,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Fast => "Fast",
            Regime::Slow => "Slow",
            Regime::Intermediate => "Intermediate",
        }
    }

    pub fn marker(self) -> Option<&'static str> {
        (self == Regime::Intermediate).then_some(OPEN_PROBLEM_MARKER)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeSpec {
    pub sigma: f64,
    pub epsilon: f64,
    pub margin: f64,
    pub regime: Regime,
    /// `σ √|ln σ|`; fast needs `ε >= margin` times this.
    pub fast_threshold: f64,
    /// `σ / √|ln σ|`; slow needs `ε <= ` this over `margin`.
    pub slow_upper: f64,
    /// `σ^{-2/3} exp(-σ^{-2/3})`; slow needs `ε >= margin` times this, unless the potential is
    /// quadratic (see [`classify_regime_quadratic`]).
    pub slow_lower: f64,
}

fn regime_thresholds(sigma: f64, epsilon: f64, margin: f64) -> Result<RegimeSpec> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "regime classification needs 0 < σ < 1, got {sigma}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
    }
    if !(margin >= 1.0) {
        return Err(Error::InvalidParameter(format!("margin must be at least 1, got {margin}")));
    }
    let log = sigma.ln().abs();
    let s23 = sigma.powf(-2.0 / 3.0);
    Ok(RegimeSpec {
        sigma,
        epsilon,
        margin,
        regime: Regime::Intermediate,
        fast_threshold: sigma * log.sqrt(),
        slow_upper: sigma / log.sqrt(),
        slow_lower: s23 * (-s23).exp(),
    })
}

pub fn classify_regime(sigma: f64, epsilon: f64, margin: f64) -> Result<RegimeSpec> {
    let mut r = regime_thresholds(sigma, epsilon, margin)?;
    r.regime = if epsilon >= margin * r.fast_threshold {
        Regime::Fast
    } else if epsilon <= r.slow_upper / margin && epsilon >= margin * r.slow_lower {
        Regime::Slow
    } else {
        Regime::Intermediate
    };
    Ok(r)
}

/// For a quadratic potential the slow regime has no lower bound on `ε`.
pub fn classify_regime_quadratic(sigma: f64, epsilon: f64, margin: f64) -> Result<RegimeSpec> {
    let mut r = regime_thresholds(sigma, epsilon, margin)?;
    r.regime = if epsilon >= margin * r.fast_threshold {
        Regime::Fast
    } else if epsilon <= r.slow_upper / margin {
        Regime::Slow
    } else {
        Regime::Intermediate
    };
    Ok(r)
}

/// `(C ε/σ²) exp(-c ε²/σ²)`, the shape of the fast-regime left-break probability.
pub fn fast_regime_bound(sigma: f64, epsilon: f64, prefactor: f64, rate: f64) -> f64 {
    let r = epsilon / (sigma * sigma);
    prefactor * r * (-rate * epsilon * r).exp()
}

/// Fraction of `n` trajectories breaking on `side`.
pub fn estimate_break_prob<T: Real>(
    params: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    n: u64,
    side: Side,
) -> Result<EstimateResult> {
    estimate_side(params, cfg, n, side)
}

fn require_trials(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyExperiment);
    }
    Ok(())
}

fn count<I: IntoIterator<Item = Result<bool>>>(outcomes: I) -> Result<u64> {
    let mut k = 0;
    for o in outcomes {
        k += u64::from(o?);
    }
    Ok(k)
}

// ---------------------------------------------------------------------------
// corridor

#[derive(Debug, Clone, Serialize)]
pub struct CorridorOutcome {
    pub h: f64,
    pub t_end: f64,
    pub empirical: EstimateResult,
    /// `2e ⌈|α(t_end)|/ε · H²/σ²⌉`
    pub prefactor: f64,
    pub bound: f64,
}

/// `2e ⌈|α(t)|/ε · H²/σ²⌉ exp(-H²/(2σ²))`.
pub fn corridor_bound(alpha_abs: f64, epsilon: f64, h: f64, sigma: f64) -> (f64, f64) {
    let ratio = h * h / (sigma * sigma);
    let prefactor = 2.0 * std::f64::consts::E * (alpha_abs / epsilon * ratio).ceil();
    (prefactor, prefactor * (-ratio / 2.0).exp())
}

/// Estimates `P{ sup_{s <= t_end} |y⁰_s| / √ξ(s) >= H }` and the matching upper bound.
#[allow(clippy::too_many_arguments)]
pub fn corridor_experiment<T: Real>(
    lin: &LinearizationData<T>,
    var: &VarianceData<T>,
    sigma: T,
    h: T,
    t_end: T,
    n: u64,
    scheme: Scheme,
    seed: u64,
) -> Result<CorridorOutcome> {
    require_trials(n)?;
    if !(h * h > T::lit(2.0) * sigma * sigma) {
        return Err(Error::Precondition(format!(
            "corridor level needs H² > 2σ² (H = {h}, σ = {sigma})"
        )));
    }
    let t_end = t_end.min(*lin.times().last().unwrap());
    let steps = (t_end / lin.h()).floor().to_usize().unwrap_or(0);
    let outcomes = run_trials(n, |i| {
        let mut rng = trial_rng(seed, i);
        let mut hit = false;
        walk_linear(lin, sigma, scheme, T::zero(), T::zero(), lin.h(), steps, &mut rng, |k, _, y| {
            if y.abs() >= h * var.xi[k].sqrt() {
                hit = true;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        })?;
        Ok(hit)
    });
    let k = count(outcomes)?;
    let eps = lin.params().epsilon().to_f64_lossy();
    let alpha = lin.alpha_from_zero(t_end).abs().to_f64_lossy();
    let (prefactor, bound) = corridor_bound(alpha, eps, h.to_f64_lossy(), sigma.to_f64_lossy());
    Ok(CorridorOutcome {
        h: h.to_f64_lossy(),
        t_end: t_end.to_f64_lossy(),
        empirical: EstimateResult::from_counts(k, n, 0, seed),
        prefactor,
        bound,
    })
}

// ---------------------------------------------------------------------------
// martingale maximal inequality

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleOutcome {
    pub delta: f64,
    pub quadratic_variation: f64,
    pub empirical: EstimateResult,
    /// `2 exp(-δ² / (2 ∫φ²))`
    pub bound: f64,
}

/// Estimates `P{ sup_{t <= t_end} |∫_0^t φ dW| >= δ }` for a deterministic integrand, using a
/// left-point sum on `steps` uniform steps.
pub fn martingale_sup_experiment<F>(
    integrand: F,
    t_end: f64,
    delta: f64,
    steps: usize,
    n: u64,
    seed: u64,
) -> Result<MartingaleOutcome>
where
    F: Fn(f64) -> f64 + Sync,
{
    require_trials(n)?;
    if !(t_end > 0.0 && steps > 0 && delta > 0.0) {
        return Err(Error::InvalidParameter(
            "martingale experiment needs t_end > 0, δ > 0 and at least one step".into(),
        ));
    }
    let h = t_end / steps as f64;
    let weights: Vec<f64> = (0..steps).map(|k| integrand(k as f64 * h) * h.sqrt()).collect();
    let qv: f64 = weights.iter().map(|w| w * w).sum();
    let outcomes = run_trials(n, |i| {
        let mut rng = trial_rng(seed, i);
        let mut m = 0.0;
        for &w in &weights {
            m += w * f64::standard_normal(&mut rng);
            if m.abs() >= delta {
                return Ok(true);
            }
        }
        Ok(false)
    });
    let k = count(outcomes)?;
    Ok(MartingaleOutcome {
        delta,
        quadratic_variation: qv,
        empirical: EstimateResult::from_counts(k, n, 0, seed),
        bound: 2.0 * (-delta * delta / (2.0 * qv)).exp(),
    })
}

// ---------------------------------------------------------------------------
// confinement of the full deviation

/// Corridor half-width `D` with `σ²|ln σ| ≪ D² ≪ ε`: `D²` is the geometric mean of `σ²|ln σ|`
/// and `ε` when `ε` exceeds the former, otherwise of `σ²|ln σ|` and `σ^{4/3}`.
pub fn proof_corridor_width(sigma: f64, epsilon: f64) -> f64 {
    let floor = sigma * sigma * sigma.ln().abs();
    let ceiling = if epsilon > floor { epsilon } else { sigma.powf(4.0 / 3.0) };
    (floor * ceiling).sqrt().sqrt()
}

/// Estimates `P{ sup_{t <= t_close ∧ τ} |y_t| >= D }` from full nonlinear paths on the
/// linearisation grid. The exit point is clamped to the corridor edge it crossed.
pub fn sup_bound_experiment<T: Real>(
    lin: &LinearizationData<T>,
    sigma: T,
    d: T,
    n: u64,
    scheme: Scheme,
    seed: u64,
) -> Result<EstimateResult> {
    require_trials(n)?;
    if !(d > T::zero()) {
        return Err(Error::InvalidParameter(format!("corridor width must be positive, got {d}")));
    }
    let p = lin.params();
    let outcomes = run_trials(n, |i| {
        let path = simulate_x_path(lin, sigma, scheme, NoiseStream::new(seed, i))?;
        let mut sup = T::zero();
        for (k, &x) in path.x.iter().enumerate() {
            let t = lin.times()[k];
            let xc = x.max(p.lower_edge(t)).min(p.upper_edge());
            sup = sup.max((xc - lin.path().x[k]).abs());
        }
        Ok(sup >= d)
    });
    Ok(EstimateResult::from_counts(count(outcomes)?, n, 0, seed))
}

// ---------------------------------------------------------------------------
// first approach of the closing corridor

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            hi,
            counts: vec![0; bins.max(1)],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn add(&mut self, v: f64) {
        if v < self.lo {
            self.underflow += 1;
        } else if v >= self.hi {
            // the right end is inclusive
            if v == self.hi {
                *self.counts.last_mut().unwrap() += 1;
            } else {
                self.overflow += 1;
            }
        } else {
            let w = (self.hi - self.lo) / self.counts.len() as f64;
            let k = (((v - self.lo) / w) as usize).min(self.counts.len() - 1);
            self.counts[k] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (0..=self.counts.len()).map(|k| self.lo + w * k as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauLOutcome {
    pub d: f64,
    pub f_plus: f64,
    /// `D² / σ`, which should be small.
    pub d2_over_sigma: f64,
    pub window: (f64, f64),
    pub in_window: EstimateResult,
    pub before_window: EstimateResult,
    /// First touch on the upper envelope `+(-d_-(t) - D²)`.
    pub upper_first: EstimateResult,
    pub histogram: Histogram,
}

/// Window `[b/a - 1 - σ f₊/a, b/a - 1 - σ/(a f₊)]` in which the first approach is expected.
pub fn tau_l_window(a: f64, b: f64, sigma: f64, f_plus: f64) -> (f64, f64) {
    let close = b / a - 1.0;
    (close - sigma * f_plus / a, close - sigma / (a * f_plus))
}

/// Records `τ_L = inf{ t : |y⁰_t| >= -d_-(t) - D² }` for `n` paths of `y⁰`.
#[allow(clippy::too_many_arguments)]
pub fn tau_l_experiment<T: Real>(
    lin: &LinearizationData<T>,
    curves: &BoundaryCurves<T>,
    sigma: T,
    d: T,
    f_plus: f64,
    n: u64,
    bins: usize,
    scheme: Scheme,
    seed: u64,
) -> Result<TauLOutcome> {
    require_trials(n)?;
    if !(f_plus > 1.0) {
        return Err(Error::InvalidParameter(format!("f₊ must exceed 1, got {f_plus}")));
    }
    let level = d * d;
    let threshold = |k: usize| -curves.d_minus[k] - level;
    if !(threshold(0) > T::zero()) {
        return Err(Error::Precondition(format!(
            "degenerate corridor: -d-(0) - D² = {} is not positive",
            threshold(0)
        )));
    }
    let p = lin.params();
    let (a, b) = (p.a().to_f64_lossy(), p.b().to_f64_lossy());
    let window = tau_l_window(a, b, sigma.to_f64_lossy(), f_plus);
    let steps = lin.len() - 1;
    let h = lin.h();
    let outcomes = run_trials(n, |i| -> Result<(f64, bool)> {
        let mut rng = trial_rng(seed, i);
        let mut prev_gap = -threshold(0);
        let mut hit: Option<(T, bool)> = None;
        walk_linear(lin, sigma, scheme, T::zero(), T::zero(), h, steps, &mut rng, |k, t, y| {
            let gap = y.abs() - threshold(k);
            if gap >= T::zero() {
                let frac = prev_gap / (prev_gap - gap);
                hit = Some((t - h + frac * h, y > T::zero()));
                return ControlFlow::Break(());
            }
            prev_gap = gap;
            ControlFlow::Continue(())
        })?;
        // the corridor closes at the end of the grid, so a path always touches it there
        let (tau, upper) = hit.unwrap_or((curves.t_close, false));
        Ok((tau.to_f64_lossy(), upper))
    });
    let span = window.1 - window.0;
    let mut histogram = Histogram::new(window.0 - span, p.t_close().to_f64_lossy(), bins);
    let (mut inside, mut before, mut upper) = (0, 0, 0);
    for o in outcomes {
        let (tau, up) = o?;
        histogram.add(tau);
        inside += u64::from(tau >= window.0 && tau <= window.1);
        before += u64::from(tau < window.0);
        upper += u64::from(up);
    }
    let df = d.to_f64_lossy();
    Ok(TauLOutcome {
        d: df,
        f_plus,
        d2_over_sigma: df * df / sigma.to_f64_lossy(),
        window,
        in_window: EstimateResult::from_counts(inside, n, 0, seed),
        before_window: EstimateResult::from_counts(before, n, 0, seed),
        upper_first: EstimateResult::from_counts(upper, n, 0, seed),
        histogram,
    })
}

// ---------------------------------------------------------------------------
// behaviour after the first approach

/// Steps used to resolve an interval of conditional simulation.
pub const CONDITIONAL_STEPS: usize = 400;

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalOutcome {
    pub t_star: f64,
    pub delta: f64,
    pub start: f64,
    /// Reaches `d+(t) + D²` within the interval.
    pub crosses_upper: EstimateResult,
    /// Goes below zero within the interval.
    pub goes_negative: EstimateResult,
}

/// Starts `y⁰` at `-d-(t*) - D²` at time `t*` and follows it over `[t*, t* + Δ]`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_hit_experiment<T: Real>(
    lin: &LinearizationData<T>,
    curves: &BoundaryCurves<T>,
    sigma: T,
    d: T,
    t_star: T,
    delta: T,
    n: u64,
    scheme: Scheme,
    seed: u64,
) -> Result<ConditionalOutcome> {
    require_trials(n)?;
    let horizon = curves.time_of_level(d);
    if !(t_star >= T::zero() && delta >= T::zero() && t_star + delta <= horizon) {
        return Err(Error::Precondition(format!(
            "interval [t*, t* + Δ] = [{t_star}, {}] must lie inside [0, T(D)] = [0, {horizon}]",
            t_star + delta
        )));
    }
    let level = d * d;
    let start = -curves.d_minus_at(t_star) - level;
    let steps = if delta > T::zero() { CONDITIONAL_STEPS } else { 0 };
    let h = if steps > 0 { delta / T::from_usize_lossy(steps) } else { T::zero() };
    let outcomes = run_trials(n, |i| -> Result<(bool, bool)> {
        let mut rng = trial_rng(seed, i);
        let (mut up, mut neg) = (false, false);
        walk_linear(lin, sigma, scheme, t_star, start, h, steps, &mut rng, |_, t, y| {
            up |= y >= curves.d_plus_at(t) + level;
            neg |= y < T::zero();
            ControlFlow::Continue(())
        })?;
        Ok((up, neg))
    });
    let (mut up, mut neg) = (0, 0);
    for o in outcomes {
        let (u, g) = o?;
        up += u64::from(u);
        neg += u64::from(g);
    }
    Ok(ConditionalOutcome {
        t_star: t_star.to_f64_lossy(),
        delta: delta.to_f64_lossy(),
        start: start.to_f64_lossy(),
        crosses_upper: EstimateResult::from_counts(up, n, 0, seed),
        goes_negative: EstimateResult::from_counts(neg, n, 0, seed),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflectionOutcome {
    pub level: f64,
    /// `Var z⁰_{t*+Δ}`
    pub terminal_variance: f64,
    pub sup_exceeds: EstimateResult,
    pub terminal_exceeds: EstimateResult,
    /// `P{sup ≥ h} - 2 P{terminal ≥ h}` from the paired samples.
    pub difference: f64,
    /// Standard error of `difference` from the per-path paired indicator.
    pub paired_standard_error: f64,
    /// `erfc(h / √(2 Var))`, the exact value of both sides.
    pub exact: f64,
}

impl ReflectionOutcome {
    pub fn agrees_within(&self, standard_errors: f64) -> bool {
        self.difference.abs() <= standard_errors * self.paired_standard_error
    }
}

/// Paired estimates of both sides of the reflection identity for the Gaussian martingale
/// `z⁰_t = (σ/√ε) ∫_{t*}^t exp(-α(s, t*)/ε) dW_s` on `[t*, t* + Δ]`.
///
/// Increments are exact Gaussians with the step variance of `z⁰`, and the supremum between grid
/// points is resolved by an exact Brownian-bridge draw in the intrinsic clock, so both sides are
/// sampled without discretisation bias. `levels` are in units of the terminal standard deviation.
#[allow(clippy::too_many_arguments)]
pub fn reflection_experiment<T: Real>(
    lin: &LinearizationData<T>,
    sigma: T,
    t_star: T,
    delta: T,
    levels: &[f64],
    steps: usize,
    n: u64,
    seed: u64,
) -> Result<Vec<ReflectionOutcome>> {
    require_trials(n)?;
    if !(delta > T::zero() && steps > 0) {
        return Err(Error::InvalidParameter("reflection experiment needs Δ > 0 and steps > 0".into()));
    }
    let eps = lin.params().epsilon().to_f64_lossy();
    let s2 = sigma.to_f64_lossy().powi(2);
    let h = delta.to_f64_lossy() / steps as f64;
    let ts = t_star.to_f64_lossy();
    // step variances from a piecewise-constant A on each step
    let mut step_var = Vec::with_capacity(steps);
    for k in 0..steps {
        let t0 = ts + h * k as f64;
        let a0 = lin.alpha(T::lit(t0), t_star).to_f64_lossy();
        let a_mid = lin.coef_at(T::lit(t0 + h / 2.0)).to_f64_lossy();
        let lam = -2.0 * a_mid / eps;
        let integral = (-2.0 * a0 / eps).exp() * (lam * h).exp_m1() / lam;
        step_var.push(s2 / eps * integral);
    }
    let total_var: f64 = step_var.iter().sum();
    let sd = total_var.sqrt();
    let thresholds: Vec<f64> = levels.iter().map(|c| c * sd).collect();
    let m = thresholds.len();
    let outcomes = run_trials(n, |i| {
        let mut rng = trial_rng(seed, i);
        let mut z = 0.0;
        let mut sup_hit = vec![false; m];
        for &v in &step_var {
            let z1 = z + v.sqrt() * f64::standard_normal(&mut rng);
            let u = f64::open01(&mut rng);
            for (j, &lvl) in thresholds.iter().enumerate() {
                if sup_hit[j] {
                    continue;
                }
                if z1 >= lvl || (z < lvl && (-2.0 * (lvl - z) * (lvl - z1) / v).exp() > u) {
                    sup_hit[j] = true;
                }
            }
            z = z1;
        }
        let term: Vec<bool> = thresholds.iter().map(|&l| z >= l).collect();
        (sup_hit, term)
    });
    let mut out = Vec::with_capacity(m);
    for (j, &lvl) in thresholds.iter().enumerate() {
        let (mut ks, mut kt) = (0u64, 0u64);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for (s, t) in &outcomes {
            ks += u64::from(s[j]);
            kt += u64::from(t[j]);
            let dv = f64::from(u8::from(s[j])) - 2.0 * f64::from(u8::from(t[j]));
            sum += dv;
            sum2 += dv * dv;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { (sum2 - nf * mean * mean) / (nf - 1.0) } else { f64::INFINITY };
        out.push(ReflectionOutcome {
            level: lvl,
            terminal_variance: total_var,
            sup_exceeds: EstimateResult::from_counts(ks, n, 0, seed),
            terminal_exceeds: EstimateResult::from_counts(kt, n, 0, seed),
            difference: mean,
            paired_standard_error: (var / nf).sqrt(),
            exact: erfc(levels[j] / std::f64::consts::SQRT_2),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// parameter sweeps

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub epsilon: f64,
    pub regime: Regime,
    pub p_left: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
    pub capped_count: u64,
}

/// Left-break estimates over the grid `sigmas × epsilons`. Each point uses `template` with its
/// step replaced by the model's default unless `fixed_dt` is set.
#[allow(clippy::too_many_arguments)]
pub fn sweep<T: Real>(
    base: &ModelParams<T>,
    sigmas: &[T],
    epsilons: &[T],
    template: &IntegratorConfig<T>,
    fixed_dt: Option<T>,
    n: u64,
    margin: f64,
    quadratic: bool,
) -> Result<Vec<SweepRow>> {
    if sigmas.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one σ and one ε".into()));
    }
    let mut rows = Vec::with_capacity(sigmas.len() * epsilons.len());
    for &sigma in sigmas {
        for &eps in epsilons {
            let params = base.with_sigma(sigma)?.with_epsilon(eps)?;
            let dt = fixed_dt.unwrap_or_else(|| default_dt(&params, template.frame));
            let cfg = template.with_dt(dt);
            let (s, e) = (sigma.to_f64_lossy(), eps.to_f64_lossy());
            let regime = if quadratic {
                classify_regime_quadratic(s, e, margin)?
            } else {
                classify_regime(s, e, margin)?
            };
            let est = estimate_side(&params, &cfg, n, Side::Left)?;
            rows.push(SweepRow {
                sigma: s,
                epsilon: e,
                regime: regime.regime,
                p_left: est.p_hat,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                n,
                capped_count: est.capped_count,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviation::{boundary_curves, build_linearization, variance_data};
    use crate::potential::PotentialSpec;

    fn reference_model(sigma: f64, epsilon: f64) -> ModelParams<f64> {
        let u = PotentialSpec::quadratic([1.0, -4.0, 3.0], 2.0, 3.0)
            .unwrap()
            .extend_default()
            .unwrap();
        ModelParams::new(u, sigma, epsilon).unwrap()
    }

    #[test]
    fn regime_examples() {
        let f = classify_regime(0.01, 0.25, DEFAULT_MARGIN).unwrap();
        assert_eq!(f.regime, Regime::Fast);
        assert!((f.fast_threshold - 0.021_459).abs() < 1e-5);
        let s = classify_regime(0.02, 5e-4, DEFAULT_MARGIN).unwrap();
        assert_eq!(s.regime, Regime::Slow);
        assert!((s.slow_upper - 0.010_111).abs() < 1e-5);
        assert!((s.slow_lower - 1.74e-5).abs() < 0.01e-5);
        for margin in [1.0, 3.0, 10.0] {
            let i = classify_regime(0.05, 0.05, margin).unwrap();
            assert_eq!(i.regime, Regime::Intermediate);
            assert_eq!(i.regime.marker(), Some(OPEN_PROBLEM_MARKER));
        }
        assert!(classify_regime(1.0, 0.1, 3.0).is_err());
        assert!(classify_regime(2.0, 0.1, 3.0).is_err());
        // tiny ε is slow only without the lower threshold
        assert_eq!(classify_regime(0.02, 1e-6, 3.0).unwrap().regime, Regime::Intermediate);
        assert_eq!(classify_regime_quadratic(0.02, 1e-6, 3.0).unwrap().regime, Regime::Slow);
    }

    #[test]
    fn corridor_precondition_and_unreachable_level() {
        let m = reference_model(0.01, 0.25);
        let lin = build_linearization(&m, 0.0025).unwrap();
        let var = variance_data(&lin).unwrap();
        let err = corridor_experiment(&lin, &var, 0.01, 0.01, 0.5, 10, Scheme::ExplicitEm, 1);
        assert!(matches!(err, Err(Error::Precondition(_))));
        let out = corridor_experiment(&lin, &var, 0.01, 1e3, 0.5, 50, Scheme::ExplicitEm, 1).unwrap();
        assert_eq!(out.empirical.successes, 0);
    }

    #[test]
    fn corridor_bound_arithmetic() {
        // |α| = 2, ε = 0.25, H = 3σ: 2e ⌈8 · 9⌉ e^{-4.5}
        let (c, b) = corridor_bound(2.0, 0.25, 0.03, 0.01);
        assert!((c - 2.0 * std::f64::consts::E * 72.0).abs() < 1e-9);
        assert!((b - c * (-4.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn martingale_inequality_holds_for_brownian_motion() {
        let out = martingale_sup_experiment(|_| 1.0, 1.0, 2.0, 200, 4000, 3).unwrap();
        assert!((out.quadratic_variation - 1.0).abs() < 1e-12);
        assert!(out.empirical.p_hat <= out.bound);
        // P{sup |W| >= 2} on [0, 1] is about 0.09
        assert!(out.empirical.ci_low < 0.1 && out.empirical.ci_high > 0.07);
    }

    #[test]
    fn proof_width_ordering() {
        let (s, e) = (0.02f64, 5e-4);
        let d = proof_corridor_width(s, e);
        let floor = s * s * s.ln().abs();
        assert!(floor < d * d && d * d < s.powf(4.0 / 3.0));
        assert!((d - 0.054).abs() < 1e-3, "D = {d}");
        let d = proof_corridor_width(0.01, 0.01);
        assert!(0.01f64.powi(2) * 0.01f64.ln().abs() < d * d && d * d < 0.01);
    }

    #[test]
    fn sup_bound_trivial_cases() {
        let m = reference_model(0.01, 0.25);
        let lin = build_linearization(&m, 0.0025).unwrap();
        let est = sup_bound_experiment(&lin, 0.01, 1.0, 200, Scheme::ExplicitEm, 5).unwrap();
        assert_eq!(est.successes, 0);
        let c = boundary_curves(&m, lin.path()).unwrap();
        let d = *c.d_plus.last().unwrap();
        let est = sup_bound_experiment(&lin, 0.01, d, 200, Scheme::ExplicitEm, 5).unwrap();
        assert!(est.p_hat < 0.05, "{est:?}");
    }

    #[test]
    fn tau_l_rejects_degenerate_corridor() {
        let m = reference_model(0.01, 0.25);
        let lin = build_linearization(&m, 0.0025).unwrap();
        let c = boundary_curves(&m, lin.path()).unwrap();
        let r = tau_l_experiment(&lin, &c, 0.01, 1.5, 3.0, 10, 10, Scheme::ExplicitEm, 0);
        assert!(matches!(r, Err(Error::Precondition(_))));
        let r = tau_l_experiment(&lin, &c, 0.01, 0.0, 1.0, 10, 10, Scheme::ExplicitEm, 0);
        assert!(r.is_err());
    }

    #[test]
    fn conditional_empty_interval_and_precondition() {
        let eps = 5e-4;
        let m = reference_model(0.02, eps);
        let lin = build_linearization(&m, eps / 20.0).unwrap();
        let c = boundary_curves(&m, lin.path()).unwrap();
        let out = conditional_hit_experiment(&lin, &c, 0.02, 0.0, 0.48, 0.0, 20, Scheme::ExplicitEm, 0).unwrap();
        assert_eq!(out.crosses_upper.successes, 0);
        assert_eq!(out.goes_negative.successes, 0);
        let r = conditional_hit_experiment(&lin, &c, 0.02, 0.0, 0.499, 0.01, 20, Scheme::ExplicitEm, 0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn histogram_counts_everything() {
        let mut h = Histogram::new(0.0, 1.0, 4);
        for v in [-0.1, 0.0, 0.3, 0.99, 1.0, 1.5] {
            h.add(v);
        }
        assert_eq!(h.counts, vec![1, 1, 0, 2]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
        assert_eq!(h.total(), 6);
        assert_eq!(h.bin_edges(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let m = reference_model(0.01, 0.25);
        let cfg = IntegratorConfig::for_model(&m);
        assert!(sweep(&m, &[], &[0.25], &cfg, None, 10, 3.0, true).is_err());
    }
}
