//! Deviation of the stochastic path from the deterministic one, and the objects used to
//! control it: the linearisation `A(t)`, the nonlinear remainder `B(y, t)`, the corridor
//! edges `d±(t)`, the variance function `v(t)` with its bounded companion `ξ(t)`, and the
//! Gaussian linearised process `y⁰`.
//!
//! Everything here lives on the uniform grid of a [`DeterministicPath`] in rescaled time.

use std::ops::ControlFlow;

use serde::Serialize;

use crate::dynamics::{solve_deterministic, DeterministicPath, Scheme};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{trial_rng, TrialRng};
use crate::scalar::Real;

/// Safety factor applied to the sampled remainder constant.
const M_INFLATION: f64 = 1.1;
/// Number of `y` intervals on `[-D_max, D_max]` used to estimate the remainder constant.
const M_Y_STEPS: usize = 400;
/// At most this many time slices enter the remainder estimate.
const M_T_SLICES: usize = 2000;

/// Linearisation of the drift around `x_det`.
#[derive(Debug, Clone)]
pub struct LinearizationData<T> {
    params: ModelParams<T>,
    path: DeterministicPath<T>,
    /// `A(t_k) = -Ũ''(x_det) - Ũ''(x_R - x_det)`.
    pub coef: Vec<T>,
    /// `-max A`
    pub a0: T,
    /// `-min A`
    pub a1: T,
    /// Sampled constant with `|B(y, t)| <= M y²` on the unbroken domain.
    pub m: T,
    /// Cumulative trapezoid `∫_0^{t_k} A`.
    alpha_prefix: Vec<T>,
}

/// Solves the deterministic path with step `dt` and linearises around it.
pub fn build_linearization<T: Real>(params: &ModelParams<T>, dt: T) -> Result<LinearizationData<T>> {
    let path = solve_deterministic(params, dt)?;
    LinearizationData::from_path(params, path)
}

impl<T: Real> LinearizationData<T> {
    pub fn from_path(params: &ModelParams<T>, path: DeterministicPath<T>) -> Result<Self> {
        let u = params.potential();
        let mut coef = Vec::with_capacity(path.len());
        for (&t, &x) in path.t.iter().zip(&path.x) {
            let a = -u.curvature(x) - u.curvature(params.right_endpoint(t) - x);
            if !(a < T::zero()) {
                return Err(Error::ModelViolation(format!(
                    "linearisation A(t) = {a} is not negative at t = {t}; convexity is broken"
                )));
            }
            coef.push(a);
        }
        let a0 = -coef.iter().copied().fold(T::neg_infinity(), T::max);
        let a1 = -coef.iter().copied().fold(T::infinity(), T::min);
        let half = path.h / T::lit(2.0);
        let mut alpha_prefix = Vec::with_capacity(coef.len());
        alpha_prefix.push(T::zero());
        for k in 1..coef.len() {
            let prev = alpha_prefix[k - 1];
            alpha_prefix.push(prev + half * (coef[k - 1] + coef[k]));
        }
        let mut lin = Self {
            params: params.clone(),
            path,
            coef,
            a0,
            a1,
            m: T::zero(),
            alpha_prefix,
        };
        let d_max = (params.b() - params.a()) / T::lit(2.0);
        lin.m = lin.estimate_remainder_constant(d_max) * T::lit(M_INFLATION);
        Ok(lin)
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn path(&self) -> &DeterministicPath<T> {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    pub fn h(&self) -> T {
        self.path.h
    }

    pub fn times(&self) -> &[T] {
        &self.path.t
    }

    /// Nonlinear remainder of the drift at deviation `y` and grid index `k`, so that
    /// `F(x_det + y) - F(x_det) = A y + B(y, t)`.
    pub fn remainder(&self, y: T, k: usize) -> T {
        let p = &self.params;
        let u = p.potential();
        let t = self.path.t[k];
        let x = self.path.x[k];
        let xr = p.right_endpoint(t);
        -u.slope(x + y) + u.slope(x) + u.slope(xr - x - y) - u.slope(xr - x) - self.coef[k] * y
    }

    /// `sup |B(y, t)| / y²` over `0 < |y| <= d_max` inside the unbroken domain (no safety factor).
    pub fn estimate_remainder_constant(&self, d_max: T) -> T {
        let p = &self.params;
        let stride = self.len().div_ceil(M_T_SLICES).max(1);
        let mut sup = T::zero();
        for k in (0..self.len()).step_by(stride) {
            let t = self.path.t[k];
            let x = self.path.x[k];
            let lo = p.lower_edge(t) - x;
            let hi = p.upper_edge() - x;
            for j in 0..=M_Y_STEPS {
                let y = -d_max + T::lit(2.0) * d_max * T::from_usize_lossy(j)
                    / T::from_usize_lossy(M_Y_STEPS);
                if y == T::zero() || !(y > lo && y < hi) {
                    continue;
                }
                let r = self.remainder(y, k).abs() / (y * y);
                sup = sup.max(r);
            }
        }
        sup
    }

    /// `α(t, s) = ∫_s^t A(u) du`, linear in the cumulative trapezoid between grid points.
    pub fn alpha(&self, t: T, s: T) -> T {
        self.alpha_from_zero(t) - self.alpha_from_zero(s)
    }

    /// `α(t) = α(t, 0)`.
    pub fn alpha_from_zero(&self, t: T) -> T {
        let (k, frac) = self.locate(t);
        if k + 1 >= self.len() {
            return self.alpha_prefix[self.len() - 1];
        }
        self.alpha_prefix[k] + (self.alpha_prefix[k + 1] - self.alpha_prefix[k]) * frac
    }

    pub fn alpha_at_index(&self, k: usize) -> T {
        self.alpha_prefix[k]
    }

    /// `A(t)` by linear interpolation.
    pub fn coef_at(&self, t: T) -> T {
        let (k, frac) = self.locate(t);
        if k + 1 >= self.len() {
            return self.coef[self.len() - 1];
        }
        self.coef[k] + (self.coef[k + 1] - self.coef[k]) * frac
    }

    fn locate(&self, t: T) -> (usize, T) {
        let s = (t / self.path.h).max(T::zero());
        let last = self.len() - 1;
        let k = s.floor().to_usize().unwrap_or(last).min(last);
        (k, s - T::from_usize_lossy(k))
    }
}

// ---------------------------------------------------------------------------
// corridor edges

/// `d+(t) = b - x_det(t)` and `d-(t) = 2a(1 + p(t)) - b - x_det(t)`: the deviation `y = x - x_det`
/// stays in `(d-, d+)` exactly while the chain is intact.
#[derive(Debug, Clone)]
pub struct BoundaryCurves<T> {
    params: ModelParams<T>,
    path: DeterministicPath<T>,
    pub d_plus: Vec<T>,
    pub d_minus: Vec<T>,
    pub t_close: T,
}

/// Builds the corridor edges from the computed deterministic path and checks their invariants.
pub fn boundary_curves<T: Real>(params: &ModelParams<T>, path: &DeterministicPath<T>) -> Result<BoundaryCurves<T>> {
    let b = params.b();
    let d_plus: Vec<T> = path.x.iter().map(|&x| b - x).collect();
    let d_minus: Vec<T> = path
        .t
        .iter()
        .zip(&path.x)
        .map(|(&t, &x)| params.lower_edge(t) - x)
        .collect();
    let tol = T::lit(64.0) * T::epsilon() * b;
    for (k, (&dp, &dm)) in d_plus.iter().zip(&d_minus).enumerate() {
        if dp + dm < -tol {
            return Err(Error::Invariant(format!(
                "d+ < -d- at t = {} (d+ = {dp}, d- = {dm})",
                path.t[k]
            )));
        }
    }
    for k in 1..d_plus.len() {
        // the first step may be flat to rounding because ẋ_det(0) = 0
        let strict = k > 1;
        let ok = if strict { d_plus[k] < d_plus[k - 1] } else { d_plus[k] <= d_plus[k - 1] };
        if !ok {
            return Err(Error::Invariant(format!(
                "d+ is not decreasing at t = {}",
                path.t[k]
            )));
        }
    }
    Ok(BoundaryCurves {
        params: params.clone(),
        path: path.clone(),
        d_plus,
        d_minus,
        t_close: params.t_close(),
    })
}

impl<T: Real> BoundaryCurves<T> {
    pub fn d_plus_at(&self, t: T) -> T {
        self.params.b() - self.path.value_at(t)
    }

    pub fn d_minus_at(&self, t: T) -> T {
        self.params.lower_edge(t) - self.path.value_at(t)
    }

    pub fn times(&self) -> &[T] {
        &self.path.t
    }

    /// `T(D) = inf { t : -d-(t) - D² = 0 }`, or `t_close` if the level is never reached.
    pub fn time_of_level(&self, d: T) -> T {
        let level = d * d;
        let g = |t: T| -self.d_minus_at(t) - level;
        let Some(k) = self.d_minus.iter().position(|&dm| -dm - level <= T::zero()) else {
            return self.t_close;
        };
        if k == 0 {
            return T::zero();
        }
        let (mut lo, mut hi) = (self.path.t[k - 1], self.path.t[k]);
        for _ in 0..100 {
            let mid = (lo + hi) / T::lit(2.0);
            if g(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

// ---------------------------------------------------------------------------
// variance

/// `v` solves `ε v' = 2 A v + 1` from `v(0) = 0`, so that `Var y⁰_t = σ² v(t)`; `ξ` solves the
/// same equation from `ξ(0) = -1/(2A(0))` and stays bounded away from zero.
#[derive(Debug, Clone)]
pub struct VarianceData<T> {
    pub v: Vec<T>,
    pub xi: Vec<T>,
    pub xi_minus: T,
    pub xi_plus: T,
}

fn exponential_step<T: Real>(value: T, coef_mean: T, h: T, eps: T) -> T {
    // exact for constant A over the step
    let lambda = T::lit(2.0) * coef_mean / eps;
    let growth = (lambda * h).exp();
    let forcing = (lambda * h).exp_m1() / lambda / eps;
    value * growth + forcing
}

pub fn variance_data<T: Real>(lin: &LinearizationData<T>) -> Result<VarianceData<T>> {
    let eps = lin.params.epsilon();
    let h = lin.h();
    let n = lin.len();
    let mut v = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    v.push(T::zero());
    xi.push(-T::one() / (T::lit(2.0) * lin.coef[0]));
    for k in 1..n {
        let mean = (lin.coef[k - 1] + lin.coef[k]) / T::lit(2.0);
        v.push(exponential_step(v[k - 1], mean, h, eps));
        xi.push(exponential_step(xi[k - 1], mean, h, eps));
    }
    let xi_minus = xi.iter().copied().fold(T::infinity(), T::min);
    let xi_plus = xi.iter().copied().fold(T::neg_infinity(), T::max);
    if !(xi_minus > T::zero()) {
        return Err(Error::Invariant(format!("ξ is not bounded away from zero (min {xi_minus})")));
    }
    Ok(VarianceData {
        v,
        xi,
        xi_minus,
        xi_plus,
    })
}

impl<T: Real> VarianceData<T> {
    /// Smallest `C` with `|ξ - v| <= C exp(2α(t)/ε)` on the grid points where that envelope is
    /// above `1e-8` (below it the difference is lost to rounding).
    pub fn envelope_constant(&self, lin: &LinearizationData<T>) -> T {
        let eps = lin.params.epsilon();
        let mut c = T::zero();
        for k in 0..self.v.len() {
            let expo = T::lit(2.0) * lin.alpha_at_index(k) / eps;
            if expo < T::lit(-18.42) {
                break;
            }
            let gap = (self.xi[k] - self.v[k]).abs();
            c = c.max(gap * (-expo).exp());
        }
        c
    }

    /// Largest `|ε (v_{k+1} - v_k)/h - (2 A_k v_k + 1)|` over the grid.
    pub fn ode_residual(&self, lin: &LinearizationData<T>) -> T {
        let eps = lin.params.epsilon();
        let h = lin.h();
        (0..self.v.len() - 1)
            .map(|k| {
                let fd = eps * (self.v[k + 1] - self.v[k]) / h;
                (fd - (T::lit(2.0) * lin.coef[k] * self.v[k] + T::one())).abs()
            })
            .fold(T::zero(), T::max)
    }
}

// ---------------------------------------------------------------------------
// sample paths

/// Identifies the Wiener increments a path was driven by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct NoiseStream {
    pub seed: u64,
    pub trial_index: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        Self { seed, trial_index }
    }

    pub fn rng(&self) -> TrialRng {
        trial_rng(self.seed, self.trial_index)
    }
}

/// Sample of the linearised process on the linearisation grid.
#[derive(Debug, Clone)]
pub struct Y0Path<T> {
    pub y0: Vec<T>,
    pub stream: NoiseStream,
}

/// Full particle path on the linearisation grid, stopped at the first grid point outside the
/// unbroken domain.
#[derive(Debug, Clone)]
pub struct XPath<T> {
    pub x: Vec<T>,
    /// Grid index of the first point outside the domain, if any.
    pub exit_index: Option<usize>,
    pub stream: NoiseStream,
}

fn check_step<T: Real>(scheme: Scheme, gain: T) -> Result<()> {
    if scheme == Scheme::ExplicitEm && gain >= T::lit(2.0) {
        return Err(Error::InvalidParameter(format!(
            "explicit step is unstable for this grid (h A1 / ε = {gain}); refine the grid"
        )));
    }
    Ok(())
}

/// One Euler step of `dy = (A/ε) y dt + (σ/√ε) dW` with increment `noise = σ √(h/ε) Z`.
#[inline]
fn linear_step<T: Real>(scheme: Scheme, y: T, coef_now: T, coef_next: T, ratio: T, noise: T) -> T {
    match scheme {
        Scheme::ExplicitEm => y + ratio * coef_now * y + noise,
        Scheme::SemiImplicitEm => (y + noise) / (T::one() - ratio * coef_next),
    }
}

/// Steps `y⁰` on a uniform grid of `steps` steps of length `h` starting at `(t_start, y_start)`.
/// `visit(k, t, y)` is called at each new grid point and may stop the walk early.
#[allow(clippy::too_many_arguments)]
pub fn walk_linear<T, F>(
    lin: &LinearizationData<T>,
    sigma: T,
    scheme: Scheme,
    t_start: T,
    y_start: T,
    h: T,
    steps: usize,
    rng: &mut TrialRng,
    mut visit: F,
) -> Result<()>
where
    T: Real,
    F: FnMut(usize, T, T) -> ControlFlow<()>,
{
    let eps = lin.params.epsilon();
    let ratio = h / eps;
    check_step(scheme, ratio * lin.a1)?;
    let noise_sd = sigma * ratio.sqrt();
    let mut y = y_start;
    let mut coef_now = lin.coef_at(t_start);
    for k in 1..=steps {
        let t = t_start + T::from_usize_lossy(k) * h;
        let coef_next = lin.coef_at(t);
        let z = T::standard_normal(rng);
        y = linear_step(scheme, y, coef_now, coef_next, ratio, noise_sd * z);
        coef_now = coef_next;
        if visit(k, t, y).is_break() {
            break;
        }
    }
    Ok(())
}

/// Euler–Maruyama path of `dy⁰ = (A(t)/ε) y⁰ dt + (σ/√ε) dW` from `y⁰(0) = 0` over the whole grid.
pub fn simulate_y0<T: Real>(
    lin: &LinearizationData<T>,
    sigma: T,
    scheme: Scheme,
    stream: NoiseStream,
) -> Result<Y0Path<T>> {
    let mut rng = stream.rng();
    let mut y0 = Vec::with_capacity(lin.len());
    y0.push(T::zero());
    if sigma == T::zero() {
        y0.resize(lin.len(), T::zero());
        return Ok(Y0Path { y0, stream });
    }
    let eps = lin.params.epsilon();
    let ratio = lin.h() / eps;
    check_step(scheme, ratio * lin.a1)?;
    let noise_sd = sigma * ratio.sqrt();
    for k in 1..lin.len() {
        let z = T::standard_normal(&mut rng);
        let y = linear_step(scheme, y0[k - 1], lin.coef[k - 1], lin.coef[k], ratio, noise_sd * z);
        y0.push(y);
    }
    Ok(Y0Path { y0, stream })
}

/// Full nonlinear path in rescaled time on the linearisation grid, driven by the same
/// increments as [`simulate_y0`] with the same stream.
pub fn simulate_x_path<T: Real>(
    lin: &LinearizationData<T>,
    sigma: T,
    scheme: Scheme,
    stream: NoiseStream,
) -> Result<XPath<T>> {
    let p = &lin.params;
    let eps = p.epsilon();
    let h = lin.h();
    let ratio = h / eps;
    check_step(scheme, ratio * p.stiffness())?;
    let noise_sd = sigma * ratio.sqrt();
    let mut rng = stream.rng();
    let mut x = Vec::with_capacity(lin.len());
    x.push(p.a());
    let mut exit_index = None;
    for k in 1..lin.len() {
        let t0 = lin.path.t[k - 1];
        let t1 = lin.path.t[k];
        let xc = x[k - 1];
        let z = if sigma == T::zero() { T::zero() } else { T::standard_normal(&mut rng) };
        let f = p.force(xc, t0);
        let next = match scheme {
            Scheme::ExplicitEm => xc + ratio * f + noise_sd * z,
            Scheme::SemiImplicitEm => {
                let g = p.force_gradient(xc, t0);
                xc + (ratio * f + noise_sd * z) / (T::one() - ratio * g)
            }
        };
        x.push(next);
        if !(next > p.lower_edge(t1) && next < p.upper_edge()) {
            exit_index = Some(k);
            break;
        }
    }
    Ok(XPath {
        x,
        exit_index,
        stream,
    })
}

/// `y = x - x_det`, split as `y = y⁰ + y¹`.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    pub y: Vec<T>,
    pub y0: Vec<T>,
    pub y1: Vec<T>,
}

/// Splits a coupled pair of paths. Fails if they were driven by different noise.
pub fn decompose<T: Real>(x_path: &XPath<T>, y0: &Y0Path<T>, lin: &LinearizationData<T>) -> Result<Decomposition<T>> {
    if x_path.stream != y0.stream {
        return Err(Error::Coupling(format!(
            "x driven by {:?}, y0 by {:?}",
            x_path.stream, y0.stream
        )));
    }
    let n = x_path.x.len().min(y0.y0.len());
    let y: Vec<T> = (0..n).map(|k| x_path.x[k] - lin.path.x[k]).collect();
    let y1 = (0..n).map(|k| y[k] - y0.y0[k]).collect();
    Ok(Decomposition {
        y,
        y0: y0.y0[..n].to_vec(),
        y1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderCheck {
    /// Grid points at which the running sup of `|y|` was still at most `D`.
    pub checked: usize,
    /// Largest `|y¹| - bound - slack`; the bound holds when this is `<= 0`.
    pub max_excess: f64,
    pub holds: bool,
}

impl<T: Real> Decomposition<T> {
    /// Checks `|y¹_t| <= (M D²/A0)(1 - exp(-A0 t/ε)) + slack` wherever `sup_{s<=t} |y_s| <= D`.
    pub fn check_remainder_bound(&self, lin: &LinearizationData<T>, d: T, slack: T) -> RemainderCheck {
        let eps = lin.params.epsilon();
        let scale = lin.m * d * d / lin.a0;
        let mut running = T::zero();
        let mut checked = 0;
        let mut max_excess = f64::NEG_INFINITY;
        for k in 0..self.y.len().saturating_sub(1) {
            running = running.max(self.y[k].abs());
            if running > d {
                break;
            }
            let t = lin.path.t[k];
            let bound = scale * (-(-lin.a0 * t / eps).exp_m1());
            let excess = self.y1[k].abs() - bound - slack;
            max_excess = max_excess.max(excess.to_f64_lossy());
            checked += 1;
        }
        RemainderCheck {
            checked,
            max_excess,
            holds: max_excess <= 0.0,
        }
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

    #[test]
    fn quadratic_linearisation_is_constant() {
        let m = reference_model(0.01, 0.25);
        let lin = build_linearization(&m, 0.25 / 100.0).unwrap();
        assert_eq!(lin.a0, 4.0);
        assert_eq!(lin.a1, 4.0);
        assert!(lin.m < 1e-6, "M = {}", lin.m);
        assert_eq!(lin.alpha(0.3, 0.3), 0.0);
        assert!((lin.alpha(0.4, 0.1) + 4.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn alpha_sandwich_and_monotonicity() {
        // quartic perturbation makes A time dependent
        let m = quartic_model(0.01, 0.1);
        let lin = build_linearization(&m, 0.001).unwrap();
        assert!(lin.a1 > lin.a0);
        let ts = lin.times().to_vec();
        for i in (0..ts.len()).step_by(37) {
            for j in (0..=i).step_by(29) {
                let (t, s) = (ts[i], ts[j]);
                let al = lin.alpha(t, s);
                assert!(al <= -lin.a0 * (t - s) + 1e-12);
                assert!(al >= -lin.a1 * (t - s) - 1e-12);
                if j < i {
                    assert!(lin.alpha(t, ts[j + 1]) > al);
                }
            }
        }
    }

    /// `U(y) = (y-2)² + 0.1 (y-2)^4 - 1.1` on `[0, 3)`.
    pub(super) fn quartic_model(sigma: f64, epsilon: f64) -> ModelParams<f64> {
        // expand 0.1 (y-2)^4 + (y-2)^2 - 1.1
        let c = [0.1, -0.8, 3.4, -7.2, 4.5];
        let u = PotentialSpec::piecewise(vec![0.0, 3.0], vec![c.to_vec()], 2.0, 3.0)
            .unwrap()
            .extend_default()
            .unwrap();
        ModelParams::new(u, sigma, epsilon).unwrap()
    }

    #[test]
    fn quartic_model_is_admissible() {
        let m = quartic_model(0.0, 0.1);
        let spec = m.potential().base();
        assert!((spec.eval(2.0, crate::Order::Value) + 1.1).abs() < 1e-12);
        assert!(spec.eval(2.999_999_999, crate::Order::Value).abs() < 1e-8);
        let rep = crate::potential::validate_potential(spec, 10_000, 1e-8).unwrap();
        assert!(rep.all_passed(), "{rep:#?}");
    }

    #[test]
    fn corridor_edges() {
        let eps = 1e-4;
        let m = reference_model(0.0, eps);
        let lin = build_linearization(&m, eps / 20.0).unwrap();
        let c = boundary_curves(&m, lin.path()).unwrap();
        assert!((c.d_plus[0] - 1.0).abs() < 1e-12);
        assert!((c.d_minus[0] + 1.0).abs() < 1e-12);
        let last = c.d_plus.len() - 1;
        assert!((c.d_plus[last] - c.d_minus[last]).abs() < 1e-12);
        for k in 0..=last {
            let t = lin.times()[k];
            let lag = m.midpoint(t) - lin.path().x[k];
            assert!((c.d_plus[k] + c.d_minus[k] - 2.0 * lag).abs() < 1e-12);
            assert!(lag >= 0.0);
        }
        // T(0) is the deterministic right-break time
        let t0 = c.time_of_level(0.0);
        assert!(c.d_minus_at(t0).abs() < 1e-10);
        assert!(c.time_of_level(0.1) < t0);
    }

    #[test]
    fn variance_closed_form_for_constant_coefficient() {
        let eps = 0.25;
        let m = reference_model(0.01, eps);
        let lin = build_linearization(&m, eps / 100.0).unwrap();
        let var = variance_data(&lin).unwrap();
        for (k, &t) in lin.times().iter().enumerate() {
            let exact = (1.0 - (-8.0 * t / eps).exp()) / 8.0;
            assert!((var.v[k] - exact).abs() < 1e-14);
            assert!((var.xi[k] - 0.125).abs() < 1e-14);
        }
        assert!((var.envelope_constant(&lin) - 0.125).abs() < 1e-6);
        assert!(var.ode_residual(&lin) < 10.0 * lin.h() / eps);
    }

    #[test]
    fn zero_noise_gives_zero_y0() {
        let m = reference_model(0.0, 0.25);
        let lin = build_linearization(&m, 0.0025).unwrap();
        let p = simulate_y0(&lin, 0.0, Scheme::ExplicitEm, NoiseStream::new(1, 1)).unwrap();
        assert!(p.y0.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn decomposition_requires_coupling() {
        let m = reference_model(0.01, 0.25);
        let lin = build_linearization(&m, 0.0025).unwrap();
        let x = simulate_x_path(&lin, 0.01, Scheme::ExplicitEm, NoiseStream::new(1, 1)).unwrap();
        let y0 = simulate_y0(&lin, 0.01, Scheme::ExplicitEm, NoiseStream::new(1, 2)).unwrap();
        assert!(matches!(decompose(&x, &y0, &lin), Err(Error::Coupling(_))));
    }

    #[test]
    fn explicit_step_guard() {
        assert!(check_step(Scheme::ExplicitEm, 2.0).is_err());
        assert!(check_step(Scheme::ExplicitEm, 1.9).is_ok());
        assert!(check_step(Scheme::SemiImplicitEm, 50.0).is_ok());
    }
}
