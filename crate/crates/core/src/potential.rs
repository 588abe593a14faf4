//! Cutoff pair potentials: definition, validation and the convex continuation past the cutoff.
//!
//! A [`PotentialSpec`] is a symmetric pair potential that vanishes for `|y| >= b`, is
//! minimised at the equilibrium distance `a`, and is uniformly convex (curvature at least
//! `u0`) on `(a0, b)`. The dynamics never need it beyond `b`, but the deterministic solution
//! and the linearisation around it do, so [`ExtendedPotential`] continues it smoothly and
//! convexly to the whole half line.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::Real;

/// Derivative order of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Value,
    Slope,
    Curvature,
}

impl Order {
    pub fn from_index(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Order::Value),
            1 => Ok(Order::Slope),
            2 => Ok(Order::Curvature),
            k => Err(Error::InvalidParameter(format!(
                "derivative order must be 0, 1 or 2, got {k}"
            ))),
        }
    }

    fn index(self) -> usize {
        match self {
            Order::Value => 0,
            Order::Slope => 1,
            Order::Curvature => 2,
        }
    }
}

/// Functional form of `U` on `[0, b)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialForm<T> {
    /// Single polynomial of degree at most two.
    Quadratic(Polynomial<T>),
    /// Polynomial pieces on `[knots[i], knots[i+1])`, with `knots[0] = 0` and the last knot `b`.
    PiecewisePoly {
        knots: Vec<T>,
        pieces: Vec<Polynomial<T>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec<T> {
    a: T,
    b: T,
    a0: T,
    u0: T,
    form: PotentialForm<T>,
}

const DEFAULT_U0_GRID: usize = 10_000;

impl<T: Real> PotentialSpec<T> {
    /// `U(y) = c2 y² + c1 y + c0` on `[0, b)`, with the default convexity data
    /// `a0 = a/2` and `u0 = min U''` on `(a0, b)`.
    pub fn quadratic(coeffs: [T; 3], a: T, b: T) -> Result<Self> {
        let poly = Polynomial::from_descending(&coeffs);
        Self::from_form(PotentialForm::Quadratic(poly), a, b)
    }

    /// Piecewise polynomial with pieces given highest power first, in the global variable `y`.
    pub fn piecewise(knots: Vec<T>, pieces: Vec<Vec<T>>, a: T, b: T) -> Result<Self> {
        if knots.len() < 2 || pieces.len() + 1 != knots.len() {
            return Err(Error::InvalidParameter(format!(
                "piecewise potential needs k+1 knots for k pieces (got {} knots, {} pieces)",
                knots.len(),
                pieces.len()
            )));
        }
        if knots[0] != T::zero() || *knots.last().unwrap() != b {
            return Err(Error::InvalidParameter(
                "piecewise knots must start at 0 and end at b".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "piecewise knots must be strictly increasing".into(),
            ));
        }
        let pieces = pieces
            .iter()
            .map(|c| Polynomial::from_descending(c))
            .collect();
        Self::from_form(PotentialForm::PiecewisePoly { knots, pieces }, a, b)
    }

    fn from_form(form: PotentialForm<T>, a: T, b: T) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > T::zero() && b > a) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < a < b, got a = {a}, b = {b}"
            )));
        }
        let mut spec = Self {
            a,
            b,
            a0: a / T::lit(2.0),
            u0: T::zero(),
            form,
        };
        spec.u0 = spec.min_curvature_on(spec.a0, spec.b, DEFAULT_U0_GRID);
        Ok(spec)
    }

    /// Overrides the convexity onset `a0` and bound `u0`.
    pub fn with_convexity(mut self, a0: T, u0: T) -> Self {
        self.a0 = a0;
        self.u0 = u0;
        self
    }

    /// Overrides `a0` and recomputes `u0` as the sampled curvature minimum on `(a0, b)`.
    pub fn with_convexity_onset(mut self, a0: T) -> Self {
        self.a0 = a0;
        self.u0 = self.min_curvature_on(a0, self.b, DEFAULT_U0_GRID);
        self
    }

    pub fn a(&self) -> T {
        self.a
    }
    pub fn b(&self) -> T {
        self.b
    }
    pub fn a0(&self) -> T {
        self.a0
    }
    pub fn u0(&self) -> T {
        self.u0
    }
    pub fn form(&self) -> &PotentialForm<T> {
        &self.form
    }

    pub fn is_quadratic(&self) -> bool {
        match &self.form {
            PotentialForm::Quadratic(_) => true,
            PotentialForm::PiecewisePoly { pieces, .. } => pieces.iter().all(|p| p.degree() <= 2)
                && pieces.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn piece(&self, y: T) -> &Polynomial<T> {
        match &self.form {
            PotentialForm::Quadratic(p) => p,
            PotentialForm::PiecewisePoly { knots, pieces } => {
                // knots[1..] are the right ends; pick the first piece whose right end exceeds y.
                let idx = knots[1..knots.len() - 1]
                    .iter()
                    .position(|&k| y < k)
                    .unwrap_or(pieces.len() - 1);
                &pieces[idx]
            }
        }
    }

    /// Derivative of order `k` (0..=3) of the polynomial branch at `y >= 0`, without the cutoff.
    /// At `y = b` this is the one-sided limit from inside.
    #[inline]
    pub(crate) fn inner(&self, y: T, k: usize) -> T {
        self.piece(y).eval_derivative(y, k)
    }

    /// Evaluates `U`, `U'` or `U''` at any real `y`, with the cutoff: exactly zero for `|y| >= b`.
    #[inline]
    pub fn eval(&self, y: T, order: Order) -> T {
        self.eval_k(y, order.index())
    }

    #[inline]
    pub(crate) fn eval_k(&self, y: T, k: usize) -> T {
        let r = y.abs();
        if r >= self.b {
            return T::zero();
        }
        let v = self.inner(r, k);
        if k % 2 == 1 && y < T::zero() {
            -v
        } else {
            v
        }
    }

    /// Like [`eval`](Self::eval) but rejects non-finite input.
    pub fn eval_checked(&self, y: T, order: u8) -> Result<T> {
        let order = Order::from_index(order)?;
        if !y.is_finite() {
            return Err(Error::NonFinite {
                what: "argument",
                at: y.to_f64_lossy(),
            });
        }
        Ok(self.eval(y, order))
    }

    fn min_curvature_on(&self, lo: T, hi: T, n: usize) -> T {
        let mut m = T::infinity();
        for i in 1..n {
            let y = lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            m = m.min(self.inner(y, 2));
        }
        m
    }

    /// Builds the convex continuation. See [`ExtendedPotential`].
    pub fn extend(&self, blend_width: T) -> Result<ExtendedPotential<T>> {
        ExtendedPotential::new(self.clone(), blend_width)
    }

    /// Continuation with the default blend width `(b - a) / 2`.
    pub fn extend_default(&self) -> Result<ExtendedPotential<T>> {
        self.extend((self.b - self.a) / T::lit(2.0))
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `0 < a0 < a < b`
    Ordering,
    /// `b < 2a`
    RangeBelowTwiceEquilibrium,
    /// `U(b-) = 0`
    ContinuityAtCutoff,
    /// `U(-y) = U(y)`
    Symmetry,
    /// `U(a) = min_{y >= 0} U(y)`
    MinimumAtEquilibrium,
    /// `U'' >= u0 > 0` on `(a0, b)`
    Convexity,
    /// value and first three derivatives continuous across interior knots
    SmoothnessAtKnots,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub condition: Condition,
    pub passed: bool,
    /// Sample point with the largest violation (or the closest call when passing).
    pub worst_point: Option<f64>,
    /// Size of the worst violation; `<= 0` means satisfied with that much slack.
    pub worst_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub grid_points: usize,
    pub tol: f64,
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn outcome(&self, condition: Condition) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.condition == condition)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const DEFAULT_VALIDATION_POINTS: usize = 10_000;
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-10;

/// Tracks the worst (largest) violation over a sweep.
struct Worst {
    point: Option<f64>,
    violation: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            point: None,
            violation: f64::NEG_INFINITY,
        }
    }

    fn offer(&mut self, point: f64, violation: f64) {
        if violation > self.violation {
            self.violation = violation;
            self.point = Some(point);
        }
    }

    fn outcome(self, condition: Condition, tol: f64) -> CheckOutcome {
        CheckOutcome {
            condition,
            passed: self.violation <= tol,
            worst_point: self.point,
            worst_violation: self.violation,
        }
    }
}

fn finite<T: Real>(v: T, what: &'static str, at: T) -> Result<f64> {
    if v.is_finite() {
        Ok(v.to_f64_lossy())
    } else {
        Err(Error::NonFinite {
            what,
            at: at.to_f64_lossy(),
        })
    }
}

/// Samples the conditions a cutoff potential must satisfy on a uniform grid over `[0, b)`.
pub fn validate_potential<T: Real>(
    spec: &PotentialSpec<T>,
    grid_points: usize,
    tol: f64,
) -> Result<ValidationReport> {
    if grid_points < 100 {
        return Err(Error::InvalidParameter(format!(
            "validation needs at least 100 grid points, got {grid_points}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (a, b, a0, u0) = (spec.a, spec.b, spec.a0, spec.u0);
    let af = a.to_f64_lossy();
    let bf = b.to_f64_lossy();
    let a0f = a0.to_f64_lossy();
    let u0f = u0.to_f64_lossy();
    let mut checks = Vec::new();

    // ordering: report the largest of the three gaps that should be positive, negated
    let mut ordering = Worst::new();
    ordering.offer(0.0, -a0f);
    ordering.offer(a0f, a0f - af);
    ordering.offer(af, af - bf);
    checks.push(CheckOutcome {
        passed: a0f > 0.0 && a0f < af && af < bf,
        ..ordering.outcome(Condition::Ordering, 0.0)
    });

    checks.push(CheckOutcome {
        condition: Condition::RangeBelowTwiceEquilibrium,
        passed: bf < 2.0 * af,
        worst_point: Some(bf),
        worst_violation: bf - 2.0 * af,
    });

    let ub = finite(spec.inner(b, 0), "U(b-)", b)?;
    checks.push(CheckOutcome {
        condition: Condition::ContinuityAtCutoff,
        passed: ub.abs() <= tol,
        worst_point: Some(bf),
        worst_violation: ub.abs(),
    });

    let ua = finite(spec.eval(a, Order::Value), "U", a)?;
    let mut symmetry = Worst::new();
    let mut minimum = Worst::new();
    minimum.offer(bf, ua); // U = 0 beyond the cutoff, so U(a) must not exceed 0
    let mut convexity = Worst::new();
    let n = grid_points;
    for i in 0..n {
        let y = b * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let yf = y.to_f64_lossy();
        let u = finite(spec.eval(y, Order::Value), "U", y)?;
        let um = finite(spec.eval(-y, Order::Value), "U", -y)?;
        let du = finite(spec.eval(y, Order::Slope), "U'", y)?;
        let dum = finite(spec.eval(-y, Order::Slope), "U'", -y)?;
        let d2u = finite(spec.eval(y, Order::Curvature), "U''", y)?;
        if y > T::zero() {
            symmetry.offer(yf, (u - um).abs().max((du + dum).abs()));
        }
        minimum.offer(yf, ua - u);
        if y > a0 {
            convexity.offer(yf, u0f - d2u);
        }
    }
    checks.push(symmetry.outcome(Condition::Symmetry, tol));
    checks.push(minimum.outcome(Condition::MinimumAtEquilibrium, tol));
    let mut conv = convexity.outcome(Condition::Convexity, tol);
    if !(u0f > 0.0) {
        conv.passed = false;
        conv.worst_violation = conv.worst_violation.max(-u0f);
    }
    checks.push(conv);

    if let PotentialForm::PiecewisePoly { knots, pieces } = &spec.form {
        let mut smooth = Worst::new();
        for (i, &k) in knots.iter().enumerate().skip(1).take(knots.len().saturating_sub(2)) {
            for order in 0..4 {
                let left = pieces[i - 1].eval_derivative(k, order);
                let right = pieces[i].eval_derivative(k, order);
                let jump = finite(left - right, "knot jump", k)?;
                smooth.offer(k.to_f64_lossy(), jump.abs());
            }
        }
        if smooth.point.is_none() {
            smooth.violation = 0.0;
        }
        checks.push(smooth.outcome(Condition::SmoothnessAtKnots, tol));
    }

    Ok(ValidationReport {
        grid_points,
        tol,
        checks,
    })
}

// ---------------------------------------------------------------------------
// extension

/// Convex continuation `Ũ` of a cutoff potential, `C³` across `b` and `C²` across `b + w`.
///
/// On `[0, b]` it is `U` itself (one-sided limits at `b`). On `(b, b + w]` it is the cubic
/// Taylor polynomial of `U` at `b-`, which matches value and the first three derivatives.
/// Beyond `b + w` it is the quadratic with the cubic's value, slope and curvature at `b + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPotential<T> {
    base: PotentialSpec<T>,
    blend_width: T,
    /// `U, U', U'', U'''` at `b-`.
    jet: [T; 4],
    tail_start: T,
    tail: [T; 3],
}

impl<T: Real> ExtendedPotential<T> {
    fn new(base: PotentialSpec<T>, blend_width: T) -> Result<Self> {
        if !(blend_width > T::zero() && blend_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "blend width must be positive, got {blend_width}"
            )));
        }
        let b = base.b;
        let jet = [
            base.inner(b, 0),
            base.inner(b, 1),
            base.inner(b, 2),
            base.inner(b, 3),
        ];
        // Ũ'' is affine on the blend region, so its minimum sits at an end point.
        for y in [b, b + blend_width] {
            let curv = jet[2] + jet[3] * (y - b);
            if curv < base.u0 {
                return Err(Error::Extension {
                    blend_width: blend_width.to_f64_lossy(),
                    at: y.to_f64_lossy(),
                    curvature: curv.to_f64_lossy(),
                    u0: base.u0.to_f64_lossy(),
                });
            }
        }
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let h = blend_width;
        let tail = [
            jet[0] + jet[1] * h + jet[2] * h * h / two + jet[3] * h * h * h / six,
            jet[1] + jet[2] * h + jet[3] * h * h / two,
            (jet[2] + jet[3] * h).max(base.u0),
        ];
        Ok(Self {
            base,
            blend_width,
            jet,
            tail_start: b + blend_width,
            tail,
        })
    }

    pub fn base(&self) -> &PotentialSpec<T> {
        &self.base
    }

    pub fn blend_width(&self) -> T {
        self.blend_width
    }

    pub fn a(&self) -> T {
        self.base.a
    }

    pub fn b(&self) -> T {
        self.base.b
    }

    /// Re-extends the underlying cutoff potential; equal to `self` for the same width.
    pub fn extend(&self, blend_width: T) -> Result<Self> {
        Self::new(self.base.clone(), blend_width)
    }

    /// k-th derivative (0..=3) of `Ũ` at `r >= 0`.
    #[inline]
    fn half_line(&self, r: T, k: usize) -> T {
        if r <= self.base.b {
            return self.base.inner(r, k);
        }
        if r <= self.tail_start {
            let h = r - self.base.b;
            let [u, du, d2u, d3u] = self.jet;
            let two = T::lit(2.0);
            return match k {
                0 => u + du * h + d2u * h * h / two + d3u * h * h * h / T::lit(6.0),
                1 => du + d2u * h + d3u * h * h / two,
                2 => d2u + d3u * h,
                3 => d3u,
                _ => T::zero(),
            };
        }
        let h = r - self.tail_start;
        let [u, du, d2u] = self.tail;
        match k {
            0 => u + du * h + d2u * h * h / T::lit(2.0),
            1 => du + d2u * h,
            2 => d2u,
            _ => T::zero(),
        }
    }

    #[inline]
    pub(crate) fn eval_k(&self, y: T, k: usize) -> T {
        let v = self.half_line(y.abs(), k);
        if k % 2 == 1 && y < T::zero() {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn eval(&self, y: T, order: Order) -> T {
        self.eval_k(y, order.index())
    }

    #[inline]
    pub fn value(&self, y: T) -> T {
        self.eval_k(y, 0)
    }

    #[inline]
    pub fn slope(&self, y: T) -> T {
        self.eval_k(y, 1)
    }

    #[inline]
    pub fn curvature(&self, y: T) -> T {
        self.eval_k(y, 2)
    }

    pub fn third_derivative(&self, y: T) -> T {
        self.eval_k(y, 3)
    }

    /// Largest sampled curvature on `[lo, hi]`.
    pub fn max_curvature_on(&self, lo: T, hi: T, n: usize) -> T {
        (0..=n)
            .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n))
            .map(|y| self.curvature(y))
            .fold(T::neg_infinity(), T::max)
    }

    pub fn min_curvature_on(&self, lo: T, hi: T, n: usize) -> T {
        (0..=n)
            .map(|i| lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n))
            .map(|y| self.curvature(y))
            .fold(T::infinity(), T::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_example() -> PotentialSpec<f64> {
        PotentialSpec::quadratic([1.0, -4.0, 3.0], 2.0, 3.0).unwrap()
    }

    #[test]
    fn reference_example_passes_every_condition() {
        let report =
            validate_potential(&reference_example(), DEFAULT_VALIDATION_POINTS, 1e-10).unwrap();
        assert!(report.all_passed(), "{report:#?}");
        assert_eq!(report.checks.len(), 6);
    }

    #[test]
    fn range_beyond_twice_equilibrium_fails() {
        let spec = PotentialSpec::quadratic([1.0, -4.0, 3.0], 2.0, 5.0).unwrap();
        let report = validate_potential(&spec, 1000, 1e-10).unwrap();
        let c = report.outcome(Condition::RangeBelowTwiceEquilibrium).unwrap();
        assert!(!c.passed);
        assert_eq!(c.worst_violation, 1.0);
    }

    #[test]
    fn cutoff_jump_fails_continuity() {
        let spec = PotentialSpec::quadratic([1.0, -4.0, 3.5], 2.0, 3.0).unwrap();
        let report = validate_potential(&spec, 1000, 1e-10).unwrap();
        let c = report.outcome(Condition::ContinuityAtCutoff).unwrap();
        assert!(!c.passed);
        assert!((c.worst_violation - 0.5).abs() < 1e-12);
        assert_eq!(report.failed().count(), 1);
    }

    #[test]
    fn misplaced_minimum_fails() {
        // minimum of y²-4y+3 is at 2, declare a = 1.8
        let spec = PotentialSpec::quadratic([1.0, -4.0, 3.0], 1.8, 3.0).unwrap();
        let report = validate_potential(&spec, 1000, 1e-10).unwrap();
        let c = report.outcome(Condition::MinimumAtEquilibrium).unwrap();
        assert!(!c.passed);
        assert!((c.worst_point.unwrap() - 2.0).abs() < 0.01);
    }

    #[test]
    fn concave_region_fails_convexity() {
        let spec = PotentialSpec::quadratic([1.0, -4.0, 3.0], 2.0, 3.0)
            .unwrap()
            .with_convexity(1.0, 3.0);
        let report = validate_potential(&spec, 1000, 1e-10).unwrap();
        assert!(!report.outcome(Condition::Convexity).unwrap().passed);
    }

    #[test]
    fn bad_grid_and_tolerance_rejected() {
        assert!(validate_potential(&reference_example(), 99, 1e-10).is_err());
        assert!(validate_potential(&reference_example(), 100, 0.0).is_err());
    }

    #[test]
    fn non_finite_evaluation_names_the_point() {
        let spec = PotentialSpec::quadratic([f64::INFINITY, -4.0, 3.0], 2.0, 3.0).unwrap();
        match validate_potential(&spec, 100, 1e-10) {
            Err(Error::NonFinite { at, .. }) => assert!(at.is_finite()),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn evaluation_examples() {
        let u = reference_example();
        assert_eq!(u.eval(2.0, Order::Value), -1.0);
        assert_eq!(u.eval(3.5, Order::Value), 0.0);
        assert_eq!(u.eval(-3.5, Order::Slope), 0.0);
        assert_eq!(u.eval(-2.0, Order::Value), u.eval(2.0, Order::Value));
        assert_eq!(u.eval(-2.5, Order::Slope), -u.eval(2.5, Order::Slope));
        assert_eq!(u.eval(2.999, Order::Curvature), 2.0);
        assert_eq!(u.eval(3.0, Order::Curvature), 0.0);
        assert!(u.eval_checked(f64::NAN, 0).is_err());
        assert!(u.eval_checked(1.0, 3).is_err());
        assert_eq!(u.eval_checked(1.0, 1).unwrap(), -2.0);
    }

    #[test]
    fn default_convexity_data() {
        let u = reference_example();
        assert_eq!(u.a0(), 1.0);
        assert_eq!(u.u0(), 2.0);
    }

    #[test]
    fn quadratic_extension_is_the_natural_continuation() {
        let u = reference_example();
        let ext = u.extend_default().unwrap();
        assert_eq!(ext.blend_width(), 0.5);
        assert!((ext.value(4.0) - 3.0).abs() < 1e-12);
        for i in 0..=3000 {
            let y = 3.0 * i as f64 / 3000.0;
            if y < 3.0 {
                assert_eq!(ext.value(y), u.eval(y, Order::Value));
            }
        }
        for i in 1..=1000 {
            let y = 10.0 * i as f64 / 1000.0;
            let natural = y * y - 4.0 * y + 3.0;
            assert!((ext.value(y) - natural).abs() < 1e-9 * (1.0 + natural.abs()));
            assert!((ext.curvature(y) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_rejects_curvature_dip() {
        // U = -(y-1)³/3 + 2(y-1)² - c on [0, 2): U''(2) = 2 and U''' = -2 at the cutoff
        let c = -1.0 / 3.0 + 2.0; // U(2) = 0
        let pieces = vec![vec![-1.0 / 3.0, 3.0, -5.0, 7.0 / 3.0 - c]];
        let spec = PotentialSpec::piecewise(vec![0.0, 2.0], pieces, 1.0, 2.0).unwrap();
        assert!((spec.eval(1.999_999_f64, Order::Value)).abs() < 1e-5);
        match spec.extend(0.9) {
            Err(Error::Extension { .. }) => {}
            other => panic!("expected extension error, got {other:?}"),
        }
        // the continuation has curvature 2 - 2w, so only a relaxed u0 admits a narrow blend
        let relaxed = spec.clone().with_convexity(0.5, 1.5);
        assert!(relaxed.extend(0.2).is_ok());
        assert!(relaxed.extend(0.3).is_err());
    }

    #[test]
    fn extending_twice_is_idempotent() {
        let ext = reference_example().extend(0.4).unwrap();
        let again = ext.extend(0.4).unwrap();
        assert_eq!(ext, again);
    }
}
