//! Monte Carlo summaries: means, proportions, confidence intervals and the
//! Kolmogorov–Smirnov distance to the standard negative exponential law.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Coefficient of the KS acceptance band `KS_BAND_COEFF / sqrt(n)` used by the
/// margin checks (the asymptotic 99% point of the Kolmogorov distribution).
pub const KS_BAND_COEFF: f64 = 1.63;

/// A Monte Carlo result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub seed: u64,
}

impl Estimate {
    /// Frequency `successes / n` with binomial standard error.
    ///
    /// The interval is the Wilson 95% score interval, except when no (or only)
    /// successes were observed; then the exact one-sided 95% bound
    /// `1 - 0.05^(1/n)` is used, which is the rule of three (`≈ 3/n`).
    pub fn proportion(successes: usize, n: usize, seed: u64) -> Self {
        assert!(n > 0, "proportion over zero trials");
        assert!(successes <= n);
        let nf = n as f64;
        let p = successes as f64 / nf;
        let se = (p * (1.0 - p) / nf).sqrt();
        let (ci_lo, ci_hi) = if successes == 0 {
            (0.0, 1.0 - 0.05f64.powf(1.0 / nf))
        } else if successes == n {
            (0.05f64.powf(1.0 / nf), 1.0)
        } else {
            wilson(p, nf)
        };
        Estimate {
            value: p,
            se,
            ci_lo,
            ci_hi,
            n,
            seed,
        }
    }

    /// Sample mean with standard error `sd / sqrt(n)` and a normal 95% interval.
    pub fn mean(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n > 0, "mean over an empty sample");
        let (mean, var) = mean_var(samples);
        let se = (var / n as f64).sqrt();
        Estimate {
            value: mean,
            se,
            ci_lo: mean - Z95 * se,
            ci_hi: mean + Z95 * se,
            n,
            seed,
        }
    }

    /// `|value - expected| <= z * se + allowance`.
    pub fn within(&self, expected: f64, z: f64, allowance: f64) -> bool {
        (self.value - expected).abs() <= z * self.se + allowance
    }
}

fn wilson(p: f64, n: f64) -> (f64, f64) {
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Mean and unbiased variance (zero for a single sample).
pub fn mean_var(samples: &[f64]) -> (f64, f64) {
    // A constant sample is reported exactly; summation would round it.
    if samples.iter().all(|&x| x == samples[0]) {
        return (samples[0], 0.0);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// KS distance between the empirical law of `samples` and `x ↦ e^x` on
/// `(-∞, 0]`. Returns `None` for an empty sample.
pub fn ks_distance_neg_exp(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = x.min(0.0).exp();
            let above = (i + 1) as f64 / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max);
    Some(d)
}

/// The KS acceptance band for `n` samples.
pub fn ks_band(n: usize) -> f64 {
    KS_BAND_COEFF / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_successes_use_rule_of_three() {
        let e = Estimate::proportion(0, 100_000, 1);
        assert_eq!(e.value, 0.0);
        assert!(e.ci_hi <= 3e-5, "{}", e.ci_hi);
        assert!(e.ci_hi > 2.9e-5);
    }

    #[test]
    fn wilson_interval_matches_textbook_value() {
        // 40 of 100: Wilson 95% interval is (0.3094, 0.4980).
        let e = Estimate::proportion(40, 100, 0);
        assert!((e.ci_lo - 0.3094).abs() < 1e-4);
        assert!((e.ci_hi - 0.4980).abs() < 1e-4);
        assert!((e.se - (0.24f64 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_of_constant_has_zero_se() {
        let e = Estimate::mean(&[1.0; 10], 0);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64).ln()).collect();
        let d = ks_distance_neg_exp(&xs).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert!(ks_distance_neg_exp(&[]).is_none());
    }
}
