//! Binomial point estimates with Wilson score intervals.

use serde::Serialize;

/// Two-sided 95% standard-normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Symbol-error estimate from a binomial error count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeEstimate {
    pub p_e: f64,
    pub errors: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PeEstimate {
    /// Point estimate `errors / trials` with a 95% Wilson interval.
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        assert!(trials > 0, "at least one trial is required");
        assert!(errors <= trials, "more errors than trials");
        let p_e = errors as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(errors, trials, Z95);
        Self { p_e, errors, trials, ci_low: ci_low.min(p_e), ci_high: ci_high.max(p_e) }
    }

    /// Binomial standard deviation of the estimate under `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// True when the two 95% intervals do not intersect.
    pub fn separated_from(&self, other: &PeEstimate) -> bool {
        self.ci_high < other.ci_low || other.ci_high < self.ci_low
    }
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 10 of 100: Wilson 95% is [0.0552, 0.1744].
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.05523).abs() < 1e-4, "{lo}");
        assert!((hi - 0.17437).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn zero_and_full_counts_stay_in_unit_interval() {
        let none = PeEstimate::from_counts(0, 50);
        assert_eq!(none.p_e, 0.0);
        assert_eq!(none.ci_low, 0.0);
        assert!(none.ci_high > 0.0 && none.ci_high < 0.1);
        let all = PeEstimate::from_counts(50, 50);
        assert_eq!(all.ci_high, 1.0);
        assert!(all.ci_low <= all.p_e);
    }

    #[test]
    fn separation() {
        let a = PeEstimate::from_counts(5, 1000);
        let b = PeEstimate::from_counts(100, 1000);
        assert!(a.separated_from(&b));
        assert!(!a.separated_from(&PeEstimate::from_counts(6, 1000)));
    }
}
