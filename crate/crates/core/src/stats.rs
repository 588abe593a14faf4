//! Binomial estimates with Wilson score intervals.

use serde::Serialize;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // clamp so that low <= p <= high survives rounding at p = 0 or 1
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Monte Carlo estimate of a probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub p_hat: f64,
    pub n: u64,
    pub successes: u64,
    /// 95% Wilson interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub capped_count: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Fraction of capped trajectories above which an estimate carries a warning.
pub const CAPPED_WARNING_FRACTION: f64 = 0.01;

impl EstimateResult {
    pub fn from_counts(successes: u64, n: u64, capped_count: u64, seed: u64) -> Self {
        let p_hat = if n == 0 { 0.0 } else { successes as f64 / n as f64 };
        let (ci_low, ci_high) = wilson_interval(successes, n, Z95);
        let warning = (n > 0 && capped_count as f64 > CAPPED_WARNING_FRACTION * n as f64).then(|| {
            format!("{capped_count} of {n} trajectories were only resolved at domain closure")
        });
        Self {
            p_hat,
            n,
            successes,
            ci_low,
            ci_high,
            capped_count,
            seed,
            warning,
        }
    }

    /// Binomial standard error `sqrt(p(1-p)/n)`.
    pub fn standard_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.p_hat * (1.0 - self.p_hat) / self.n as f64).sqrt()
    }

    /// Wilson interval at another confidence level.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.n, z)
    }

    /// Whether the Wilson intervals at quantile `z` of two estimates intersect.
    pub fn overlaps(&self, other: &Self, z: f64) -> bool {
        let (l1, h1) = self.interval(z);
        let (l2, h2) = other.interval(z);
        l1 <= h2 && l2 <= h1
    }
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
