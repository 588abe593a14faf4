//! N-particle chain with a fixed left end and a pulled right end.
//!
//! Particles `1..=N` start at `(i-1)a`; particle 1 stays at 0 and particle N follows
//! `(N-1)a(1 + εs)`. Bond `i` joins particles `i` and `i+1`, so bonds are numbered `1..=N-1`
//! and bond `N-1` touches the pulled end. The run stops at the first bond whose gap reaches `b`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Order, PotentialSpec};
use crate::rng::{run_trials, trial_rng};
use crate::scalar::Real;

/// Bridge exit probabilities below `exp(-BRIDGE_CUTOFF)` are not drawn.
const BRIDGE_CUTOFF: f64 = 46.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ForceMode {
    /// Every pair `i < j`.
    AllPairs,
    /// Pairs closer than `b`, found by scanning the ordered positions.
    NeighborList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ChainCrossing {
    /// Break at the first grid point with a gap at or above `b`.
    Grid,
    /// Also draw a Brownian-bridge break for steps whose end points are intact.
    BridgeCorrected,
}

#[derive(Debug, Clone)]
pub struct ChainConfig<T> {
    pub particles: usize,
    pub potential: PotentialSpec<T>,
    pub sigma: T,
    pub epsilon: T,
    /// Physical time step.
    pub dt: T,
    pub seed: u64,
    pub trial_index: u64,
    pub force_mode: ForceMode,
    pub crossing: ChainCrossing,
}

impl<T: Real> ChainConfig<T> {
    /// Neighbour list, bridge-corrected crossings, step `min(0.01, 0.1/A1)`.
    pub fn new(particles: usize, potential: PotentialSpec<T>, sigma: T, epsilon: T) -> Self {
        let stiffness = chain_stiffness(&potential);
        Self {
            particles,
            potential,
            sigma,
            epsilon,
            dt: T::lit(0.01).min(T::lit(0.1) / stiffness),
            seed: 0,
            trial_index: 0,
            force_mode: ForceMode::NeighborList,
            crossing: ChainCrossing::BridgeCorrected,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_trial(mut self, trial_index: u64) -> Self {
        self.trial_index = trial_index;
        self
    }
    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }
    pub fn with_force_mode(mut self, mode: ForceMode) -> Self {
        self.force_mode = mode;
        self
    }
    pub fn with_crossing(mut self, crossing: ChainCrossing) -> Self {
        self.crossing = crossing;
        self
    }

    pub fn bonds(&self) -> usize {
        self.particles - 1
    }

    /// Position of the pulled end at rescaled time `t = εs`.
    pub fn pulled_end(&self, t: T) -> T {
        T::from_usize_lossy(self.particles - 1) * self.potential.a() * (T::one() + t)
    }

    /// Initial positions `(i-1)a`.
    pub fn initial_positions(&self) -> Vec<T> {
        let a = self.potential.a();
        (0..self.particles).map(|i| T::from_usize_lossy(i) * a).collect()
    }

    fn check(&self) -> Result<()> {
        if self.particles < 3 {
            return Err(Error::InvalidParameter(format!(
                "a chain needs at least 3 particles, got {}",
                self.particles
            )));
        }
        if !(self.epsilon > T::zero() && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("ε must be positive, got {}", self.epsilon)));
        }
        if !(self.sigma >= T::zero() && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ must be non-negative, got {}", self.sigma)));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {}", self.dt)));
        }
        let limit = T::one() / chain_stiffness(&self.potential);
        if self.dt >= limit {
            return Err(Error::InvalidParameter(format!(
                "step {} exceeds the explicit stability limit {limit}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// `2 max U''` over gaps in `[2a - b, b]`.
fn chain_stiffness<T: Real>(u: &PotentialSpec<T>) -> T {
    let (lo, hi) = (T::lit(2.0) * u.a() - u.b(), u.b());
    let n = 1000;
    let mut m = T::zero();
    for i in 0..=n {
        let y = lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        // evaluate just inside the cutoff at the right end
        let y = if i == n { y - (hi - lo) * T::lit(1e-9) } else { y };
        m = m.max(u.eval(y, Order::Curvature));
    }
    T::lit(2.0) * m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainBreakRecord<T> {
    /// Physical time of the break.
    pub break_time: T,
    /// 1-based bond index.
    pub bond_index: usize,
    /// Gaps at the break; the broken bond sits exactly at `b`.
    pub gap_profile: Vec<T>,
    pub steps: u64,
}

/// Internal forces `-∂H/∂x_i` with `H = Σ_{i<j} U(x_j - x_i)`, accumulated pair by pair in
/// lexicographic order so that both modes produce identical sums.
pub fn chain_forces<T: Real>(u: &PotentialSpec<T>, x: &[T], mode: ForceMode, forces: &mut [T]) {
    forces.iter_mut().for_each(|f| *f = T::zero());
    let b = u.b();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = x[j] - x[i];
            if mode == ForceMode::NeighborList && d >= b {
                break;
            }
            let s = u.eval(d, Order::Slope);
            forces[i] = forces[i] + s;
            forces[j] = forces[j] - s;
        }
    }
}

/// Integrates one chain trajectory until the first bond breaks.
pub fn simulate_chain<T: Real>(cfg: &ChainConfig<T>) -> Result<ChainBreakRecord<T>> {
    cfg.check()?;
    let n = cfg.particles;
    let u = &cfg.potential;
    let b = u.b();
    let a = u.a();
    let dt = cfg.dt;
    let h = dt * cfg.epsilon;
    let noise_sd = cfg.sigma * dt.sqrt();
    let noise_var = noise_sd * noise_sd;
    let bridge = cfg.crossing == ChainCrossing::BridgeCorrected && noise_var > T::zero();
    let cutoff = T::lit(BRIDGE_CUTOFF);
    // uniform strain reaches b at t = b/a - 1; allow four times that
    let max_steps = (T::lit(4.0) * (b / a - T::one()) / h).ceil().to_u64().unwrap_or(u64::MAX);
    let mut rng = trial_rng(cfg.seed, cfg.trial_index);

    let mut x = cfg.initial_positions();
    let mut x1 = x.clone();
    let mut forces = vec![T::zero(); n];
    let mut probs: Vec<Option<T>> = vec![None; n - 1];
    for step in 0..max_steps {
        let t1 = T::from_u64(step + 1).unwrap() * h;
        chain_forces(u, &x, cfg.force_mode, &mut forces);
        for i in 1..n - 1 {
            let z = T::standard_normal(&mut rng);
            x1[i] = x[i] + forces[i] * dt + noise_sd * z;
        }
        x1[n - 1] = cfg.pulled_end(t1);

        let mut first: Option<(usize, T)> = None;
        for k in 0..n - 1 {
            let g0 = x[k + 1] - x[k];
            let g1 = x1[k + 1] - x1[k];
            if g1 <= T::zero() {
                return Err(Error::ModelViolation(format!(
                    "particles {} and {} crossed at step {}",
                    k + 1,
                    k + 2,
                    step + 1
                )));
            }
            if g1 >= b {
                let frac = (b - g0) / (g1 - g0);
                // ties go to the bond nearer the pulled end
                if first.is_none_or(|(_, f)| frac <= f) {
                    first = Some((k, frac));
                }
            }
        }
        if let Some((k, frac)) = first {
            let frac = match cfg.crossing {
                ChainCrossing::Grid => T::one(),
                ChainCrossing::BridgeCorrected => frac.max(T::zero()).min(T::one()),
            };
            let gap_profile = (0..n - 1)
                .map(|j| {
                    if j == k {
                        return b;
                    }
                    let g0 = x[j + 1] - x[j];
                    let g1 = x1[j + 1] - x1[j];
                    g0 + frac * (g1 - g0)
                })
                .collect();
            return Ok(ChainBreakRecord {
                break_time: (T::from_u64(step).unwrap() + frac) * dt,
                bond_index: k + 1,
                gap_profile,
                steps: step + 1,
            });
        }

        if bridge {
            // bonds with one free end move with variance σ² dt, with two free ends 2σ² dt
            let mut best: Option<(usize, T)> = None;
            for k in (0..n - 1).rev() {
                let free = usize::from(k > 0) + usize::from(k + 1 < n - 1);
                let var = noise_var * T::from_usize_lossy(free);
                let d0 = b - (x[k + 1] - x[k]);
                let d1 = b - (x1[k + 1] - x1[k]);
                let expo = T::lit(2.0) * d0 * d1 / var;
                probs[k] = None;
                if expo < cutoff {
                    let p = (-expo).exp();
                    if T::open01(&mut rng) < p {
                        probs[k] = Some(p);
                        if best.is_none_or(|(_, q)| p > q) {
                            best = Some((k, p));
                        }
                    }
                }
            }
            if let Some((k, _)) = best {
                let mut gap_profile: Vec<T> = (0..n - 1).map(|j| x[j + 1] - x[j]).collect();
                gap_profile[k] = b;
                return Ok(ChainBreakRecord {
                    break_time: (T::from_u64(step).unwrap() + T::lit(0.5)) * dt,
                    bond_index: k + 1,
                    gap_profile,
                    steps: step + 1,
                });
            }
        }
        std::mem::swap(&mut x, &mut x1);
    }
    Err(Error::Integration(format!(
        "no bond broke within {max_steps} steps"
    )))
}

/// Counts of the first-breaking bond over `n` trials with indices `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondHistogram {
    pub n: u64,
    /// `counts[i - 1]` is the number of trials in which bond `i` broke first.
    pub counts: Vec<u64>,
}

impl BondHistogram {
    pub fn fraction(&self, bond_index: usize) -> f64 {
        self.counts[bond_index - 1] as f64 / self.n as f64
    }

    /// `(bond_index, count, fraction)` for every bond.
    pub fn rows(&self) -> Vec<(usize, u64, f64)> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1, c, c as f64 / self.n as f64))
            .collect()
    }
}

pub fn break_location_histogram<T: Real>(cfg: &ChainConfig<T>, n: u64) -> Result<BondHistogram> {
    if n == 0 {
        return Err(Error::EmptyExperiment);
    }
    cfg.check()?;
    let records = run_trials(n, |i| simulate_chain(&cfg.clone().with_trial(i)).map(|r| r.bond_index));
    let mut counts = vec![0; cfg.bonds()];
    for r in records {
        counts[r? - 1] += 1;
    }
    Ok(BondHistogram { n, counts })
}
