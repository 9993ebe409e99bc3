//! Binomial estimates with Wilson score intervals.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The endpoints are exact at the extreme counts.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Plug-in binomial standard error.
pub fn binomial_se(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// A Monte Carlo proportion with its interval and provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub params: serde_json::Value,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub successes: u64,
    pub samples: u64,
    pub seed: u64,
}

impl EstimateReport {
    pub fn from_counts(
        quantity: impl Into<String>,
        params: serde_json::Value,
        successes: u64,
        samples: u64,
        seed: u64,
    ) -> Self {
        let (ci_lo, ci_hi) = wilson(successes, samples, Z95);
        let estimate = if samples == 0 {
            f64::NAN
        } else {
            successes as f64 / samples as f64
        };
        EstimateReport {
            quantity: quantity.into(),
            params,
            estimate,
            ci_lo,
            ci_hi,
            successes,
            samples,
            seed,
        }
    }

    pub fn std_error(&self) -> f64 {
        binomial_se(self.successes, self.samples)
    }

    /// True when `value` lies within `k` standard errors of the estimate.
    /// A zero standard error (all-or-nothing samples) demands exact equality.
    pub fn within_sigmas(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_proportion() {
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        // Reference values from the closed form.
        assert!((lo - 0.2189).abs() < 1e-3, "{lo}");
        assert!((hi - 0.3958).abs() < 1e-3, "{hi}");
    }

    #[test]
    fn wilson_edge_counts() {
        let (lo, hi) = wilson(0, 50, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = wilson(50, 50, Z95);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.9);
    }
}
