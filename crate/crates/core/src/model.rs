//! Parameters of one stretching experiment and the force field they induce.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::ExtendedPotential;
use crate::scalar::Real;

/// Time axis in which an SDE is written.
///
/// `Physical` is the original time `s`, in which the drift is `O(1)`; `Rescaled` is
/// `t = ε s`, in which the drift carries a `1/ε` factor and the noise `σ/√ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Physical,
    Rescaled,
}

/// Pulling schedule `p(t)` of the right particle, `x_R(t) = 2a(1 + p(t))`.
#[derive(Debug, Clone, PartialEq)]
pub enum PullSchedule<T> {
    /// `p(t) = t`.
    Linear,
    /// `p(t) = Σ c_k t^k` with `c_0 = 0`, strictly increasing on the horizon.
    Polynomial(Polynomial<T>),
}

impl<T: Real> PullSchedule<T> {
    #[inline]
    pub fn value(&self, t: T) -> T {
        match self {
            PullSchedule::Linear => t,
            PullSchedule::Polynomial(p) => p.eval(t),
        }
    }

    #[inline]
    pub fn rate(&self, t: T) -> T {
        match self {
            PullSchedule::Linear => T::one(),
            PullSchedule::Polynomial(p) => p.eval_derivative(t, 1),
        }
    }

    /// Solves `p(t) = target` for `t >= 0` by bracketing and bisection.
    pub fn inverse(&self, target: T) -> Result<T> {
        if let PullSchedule::Linear = self {
            return Ok(target);
        }
        let mut hi = T::one();
        let mut expansions = 0;
        while self.value(hi) < target {
            hi = hi * T::lit(2.0);
            expansions += 1;
            if expansions > 200 {
                return Err(Error::InvalidParameter(
                    "pull schedule never reaches the closing strain".into(),
                ));
            }
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if self.value(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * hi {
                break;
            }
        }
        Ok((lo + hi) / T::lit(2.0))
    }
}

/// `(a, b, σ, ε, p)` for one stretching experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    potential: ExtendedPotential<T>,
    sigma: T,
    epsilon: T,
    pull: PullSchedule<T>,
    t_close: T,
    pull_rate_bounds: (T, T),
    stiffness: T,
}

const PULL_SAMPLES: usize = 1000;

impl<T: Real> ModelParams<T> {
    pub fn new(potential: ExtendedPotential<T>, sigma: T, epsilon: T) -> Result<Self> {
        Self::with_pull(potential, sigma, epsilon, PullSchedule::Linear)
    }

    pub fn with_pull(
        potential: ExtendedPotential<T>,
        sigma: T,
        epsilon: T,
        pull: PullSchedule<T>,
    ) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulling speed must be positive, got {epsilon}"
            )));
        }
        if !(sigma >= T::zero() && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise intensity must be non-negative, got {sigma}"
            )));
        }
        if pull.value(T::zero()) != T::zero() {
            return Err(Error::InvalidParameter("pull schedule must satisfy p(0) = 0".into()));
        }
        let (a, b) = (potential.a(), potential.b());
        let t_close = pull.inverse(b / a - T::one())?;
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..=PULL_SAMPLES {
            let t = t_close * T::from_usize_lossy(i) / T::from_usize_lossy(PULL_SAMPLES);
            let r = pull.rate(t);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !(lo > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "pull schedule must be strictly increasing on [0, {t_close}] (min rate {lo})"
            )));
        }
        // In the unbroken domain both gaps x and x_R - x lie in [2a - b, b].
        let stiffness = T::lit(2.0) * potential.max_curvature_on(T::lit(2.0) * a - b, b, 1000);
        Ok(Self {
            potential,
            sigma,
            epsilon,
            pull,
            t_close,
            pull_rate_bounds: (lo, hi),
            stiffness,
        })
    }

    /// Same model with a different noise level.
    pub fn with_sigma(&self, sigma: T) -> Result<Self> {
        Self::with_pull(self.potential.clone(), sigma, self.epsilon, self.pull.clone())
    }

    /// Same model with a different pulling speed.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::with_pull(self.potential.clone(), self.sigma, epsilon, self.pull.clone())
    }

    pub fn potential(&self) -> &ExtendedPotential<T> {
        &self.potential
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }
    pub fn pull(&self) -> &PullSchedule<T> {
        &self.pull
    }
    pub fn a(&self) -> T {
        self.potential.a()
    }
    pub fn b(&self) -> T {
        self.potential.b()
    }

    /// Sampled `(min p', max p')` on `[0, t_close]`.
    pub fn pull_rate_bounds(&self) -> (T, T) {
        self.pull_rate_bounds
    }

    /// Rescaled time at which the domain closes, `p(t_close) = b/a - 1`.
    pub fn t_close(&self) -> T {
        self.t_close
    }

    /// Upper bound on `|∂F/∂x|` over the unbroken domain, an estimate of `A1`.
    pub fn stiffness(&self) -> T {
        self.stiffness
    }

    /// `x_R(t) = 2a(1 + p(t))`.
    #[inline]
    pub fn right_endpoint(&self, t: T) -> T {
        T::lit(2.0) * self.a() * (T::one() + self.pull.value(t))
    }

    /// Lowest position of the middle particle before the right bond breaks.
    #[inline]
    pub fn lower_edge(&self, t: T) -> T {
        self.right_endpoint(t) - self.b()
    }

    /// Highest position before the left bond breaks.
    #[inline]
    pub fn upper_edge(&self) -> T {
        self.b()
    }

    /// Midpoint `a(1 + p(t))` between the two outer particles.
    #[inline]
    pub fn midpoint(&self, t: T) -> T {
        self.a() * (T::one() + self.pull.value(t))
    }

    /// Force `-∂H̃/∂x = -Ũ'(x) + Ũ'(x_R(t) - x)` at rescaled time `t`.
    #[inline]
    pub fn force(&self, x: T, t: T) -> T {
        let u = &self.potential;
        -u.slope(x) + u.slope(self.right_endpoint(t) - x)
    }

    /// `∂F/∂x = -Ũ''(x) - Ũ''(x_R(t) - x)`.
    #[inline]
    pub fn force_gradient(&self, x: T, t: T) -> T {
        let u = &self.potential;
        -u.curvature(x) - u.curvature(self.right_endpoint(t) - x)
    }

    /// Drift of the SDE in the given frame, with `t` the rescaled time in both cases.
    #[inline]
    pub fn drift(&self, x: T, t: T, frame: Frame) -> T {
        match frame {
            Frame::Physical => self.force(x, t),
            Frame::Rescaled => self.force(x, t) / self.epsilon,
        }
    }

    /// `∂(drift)/∂x` in the given frame.
    #[inline]
    pub fn drift_gradient(&self, x: T, t: T, frame: Frame) -> T {
        match frame {
            Frame::Physical => self.force_gradient(x, t),
            Frame::Rescaled => self.force_gradient(x, t) / self.epsilon,
        }
    }

    /// Diffusion coefficient in the given frame.
    #[inline]
    pub fn diffusion(&self, frame: Frame) -> T {
        match frame {
            Frame::Physical => self.sigma,
            Frame::Rescaled => self.sigma / self.epsilon.sqrt(),
        }
    }
}
