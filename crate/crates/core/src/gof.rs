//! Log-normality tests on the ensemble price distribution at a fixed
//! horizon: Kolmogorov–Smirnov and Anderson–Darling, plus a plot-ready
//! log-price histogram export.
//!
//! Both tests standardize the log prices with the sample's own mean and
//! standard deviation. Estimating the parameters from the tested sample
//! makes the reported KS p-values optimistic relative to a fully specified
//! null; they are reported in that standard form on purpose, and the AD
//! decision rule uses the fixed critical-value row for the
//! estimated-parameter normal case.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::GofError;
use crate::sim::ForecastEnsemble;

/// Significance levels, in percent, that AD critical values are quoted at.
pub const AD_LEVELS_PCT: [f64; 5] = [15.0, 10.0, 5.0, 2.5, 1.0];

/// Anderson–Darling critical values for normality with estimated mean and
/// variance, matching [`AD_LEVELS_PCT`].
pub const AD_CRITICAL_VALUES: [f64; 5] = [0.575, 0.655, 0.785, 0.916, 1.090];

const MIN_SAMPLE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GofTestKind {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "AD")]
    Ad,
}

impl std::fmt::Display for GofTestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GofTestKind::Ks => write!(f, "KS"),
            GofTestKind::Ad => write!(f, "AD"),
        }
    }
}

/// Outcome of one goodness-of-fit test at one horizon step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub test: GofTestKind,
    pub horizon_step: usize,
    pub statistic: f64,
    /// Asymptotic p-value; present for KS only.
    pub p_value: Option<f64>,
    /// The fixed critical-value row; present for AD only.
    pub ad_critical_values: Option<[f64; 5]>,
    /// Significance levels (percent) at which the log-normal null is
    /// rejected: p-value below the level for KS, statistic above the
    /// critical value for AD.
    pub reject_at: Vec<f64>,
}

/// Sorted log prices with their fitted moments.
fn standardized_logs(sample: &[f64]) -> Result<(Vec<f64>, f64, f64), GofError> {
    if sample.len() < MIN_SAMPLE {
        return Err(GofError::InsufficientSample { needed: MIN_SAMPLE, got: sample.len() });
    }
    if let Some(index) = sample.iter().position(|&p| !(p > 0.0)) {
        return Err(GofError::NonPositivePrice { index });
    }
    let mut logs: Vec<f64> = sample.iter().map(|p| p.ln()).collect();
    // Moments are taken over the sorted values so the result is exactly
    // invariant under permutations of the input.
    logs.sort_unstable_by(f64::total_cmp);
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(GofError::DegenerateSample);
    }
    Ok((logs, mean, std))
}

/// Survival function of the asymptotic Kolmogorov distribution at `lambda`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form, fast for small arguments.
        let factor = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let w = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 0..20u32 {
            let odd = f64::from(2 * k + 1);
            cdf += (-odd * odd * w).exp();
        }
        (1.0 - factor * cdf).clamp(0.0, 1.0)
    } else {
        let mut p = 0.0;
        for k in 1..=100u32 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let kf = f64::from(k);
            p += sign * (-2.0 * kf * kf * lambda * lambda).exp();
        }
        (2.0 * p).clamp(0.0, 1.0)
    }
}

/// Kolmogorov–Smirnov test of log-normality with fitted mean and variance.
/// The p-value is the asymptotic Kolmogorov survival function at
/// `sqrt(n) * statistic`.
pub fn ks_lognormal(sample: &[f64], horizon_step: usize) -> Result<GofResult, GofError> {
    let (logs, mean, std) = standardized_logs(sample)?;
    let n = logs.len() as f64;
    let normal = Normal::standard();

    let mut statistic: f64 = 0.0;
    for (i, y) in logs.iter().enumerate() {
        let f = normal.cdf((y - mean) / std);
        let upper = ((i + 1) as f64 / n - f).abs();
        let lower = (f - i as f64 / n).abs();
        statistic = statistic.max(upper.max(lower));
    }
    let p = kolmogorov_survival(n.sqrt() * statistic);
    let reject_at = AD_LEVELS_PCT.iter().copied().filter(|level| p < level / 100.0).collect();
    Ok(GofResult {
        test: GofTestKind::Ks,
        horizon_step,
        statistic,
        p_value: Some(p),
        ad_critical_values: None,
        reject_at,
    })
}

/// Anderson–Darling test of log-normality with fitted mean and variance,
/// decided against the fixed critical-value row.
pub fn ad_lognormal(sample: &[f64], horizon_step: usize) -> Result<GofResult, GofError> {
    let (logs, mean, std) = standardized_logs(sample)?;
    let n = logs.len();
    let nf = n as f64;
    let normal = Normal::standard();
    // Tail-safe log CDF: clamp away exact zeros before taking the log.
    let log_phi = |z: f64| normal.cdf(z).max(f64::MIN_POSITIVE).ln();

    let mut sum = 0.0;
    for i in 0..n {
        let z_lo = (logs[i] - mean) / std;
        let z_hi = (logs[n - 1 - i] - mean) / std;
        sum += (2 * i + 1) as f64 * (log_phi(z_lo) + log_phi(-z_hi));
    }
    let statistic = -nf - sum / nf;
    let reject_at = AD_LEVELS_PCT
        .iter()
        .zip(AD_CRITICAL_VALUES.iter())
        .filter(|(_, crit)| statistic > **crit)
        .map(|(level, _)| *level)
        .collect();
    Ok(GofResult {
        test: GofTestKind::Ad,
        horizon_step,
        statistic,
        p_value: None,
        ad_critical_values: Some(AD_CRITICAL_VALUES),
        reject_at,
    })
}

/// Histogram of log prices at one horizon step with the fitted normal
/// density sampled at the bin centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHistogram {
    pub horizon_step: usize,
    /// `n_bins + 1` ascending bin edges over the log prices.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Fitted normal density at each bin center; all zeros when the sample
    /// is constant and no density can be fitted.
    pub fitted_density: Vec<f64>,
    pub log_mean: f64,
    pub log_std: f64,
}

impl LogHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Plot-ready export of the ensemble's log-price distribution at a step.
pub fn distribution_export(
    ensemble: &ForecastEnsemble,
    horizon_step: usize,
    n_bins: usize,
) -> Result<LogHistogram, GofError> {
    let sample = ensemble.prices_at_step(horizon_step)?;
    log_histogram(&sample, horizon_step, n_bins)
}

/// Histogram of the log of an arbitrary positive price sample.
pub fn log_histogram(sample: &[f64], horizon_step: usize, n_bins: usize) -> Result<LogHistogram, GofError> {
    if n_bins == 0 {
        return Err(GofError::NoBins);
    }
    if let Some(index) = sample.iter().position(|&p| !(p > 0.0)) {
        return Err(GofError::NonPositivePrice { index });
    }
    let logs: Vec<f64> = sample.iter().map(|p| p.ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let std = if logs.len() > 1 {
        (logs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };

    let mut lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for y in &logs {
        let idx = (((y - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }

    let fitted_density = if std > 0.0 {
        let normal = Normal::new(mean, std).expect("positive std");
        edges.windows(2).map(|w| normal.pdf(0.5 * (w[0] + w[1]))).collect()
    } else {
        vec![0.0; n_bins]
    };

    Ok(LogHistogram { horizon_step, edges, counts, fitted_density, log_mean: mean, log_std: std })
}
