//! Small statistics helpers shared by the Monte Carlo suites.

use serde::{Deserialize, Serialize};

/// A Monte Carlo frequency estimate with a Wilson 95% confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MCEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(successes, trials, 1.959_963_984_540_054);
        MCEstimate {
            trials,
            successes,
            estimate: if trials == 0 {
                f64::NAN
            } else {
                successes as f64 / trials as f64
            },
            ci_low: lo,
            ci_high: hi,
        }
    }
}

/// Wilson score interval for a binomial proportion. The boundary cases keep
/// their exact endpoint (0 successes pins the lower end, all successes the
/// upper).
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Sample mean and standard deviation (unbiased).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pearson chi-square statistic for observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled
/// into the final cell. Returns (statistic, degrees of freedom).
pub fn chi_square(observed: &[u64], expected_probs: &[f64], min_expected: f64) -> (f64, usize) {
    assert_eq!(observed.len(), expected_probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pool_obs = 0.0;
    let mut pool_exp = 0.0;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = n * p;
        if e < min_expected {
            pool_obs += o as f64;
            pool_exp += e;
        } else {
            stat += (o as f64 - e) * (o as f64 - e) / e;
            cells += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

/// Upper quantile of the chi-square distribution via the Wilson-Hilferty
/// transform; accurate to ~1% for df >= 3, which is all the tests need.
pub fn chi_square_quantile(df: usize, z: f64) -> f64 {
    let k = df as f64;
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_zero_and_full() {
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, 1.96);
        assert!(lo > 0.95);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn chi_square_quantile_reference() {
        // chi2 0.99 quantiles: df=10 -> 23.209, df=21 -> 38.932
        let q10 = chi_square_quantile(10, 2.326_347_874_040_841);
        assert!((q10 - 23.209).abs() < 0.25, "{q10}");
        let q21 = chi_square_quantile(21, 2.326_347_874_040_841);
        assert!((q21 - 38.932).abs() < 0.35, "{q21}");
    }
}
