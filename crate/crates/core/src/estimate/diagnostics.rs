//! Health checks for importance-weight streams and interval coverage.
//!
//! The log of an unbiased importance weight concentrates near the log
//! normalizer whenever the proposal is close to the target: its mean sits
//! exactly one KL divergence below the normalizer, its spread is bounded
//! by simple functions of that KL, and the chance of overshooting the
//! normalizer by t nats is at most exp(-t). Comparing empirical moments
//! and tail rates of the logged weights against those references turns a
//! bag of weights into an actionable proposal-quality report.
//!
//! The coverage estimate answers the practical question "if I reran this
//! whole estimate, how often would the reported interval contain the true
//! value?" using a normal approximation to each side's replicate mean.

use crate::special::normal_cdf;

/// Summary moments of a set of log weights, measured about a reference
/// log normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDiagnostics {
    pub count: usize,
    /// Mean of (log w - log z). For an unbiased weight this estimates
    /// minus the KL divergence from proposal to target.
    pub centered_mean: f64,
    /// Unbiased sample variance of log w.
    pub variance: f64,
    /// Mean absolute deviation of log w about log z.
    pub mad: f64,
    /// For each threshold t: (t, empirical Pr[log w >= log z + t], exp(-t)).
    /// The empirical rate should not exceed the bound beyond noise.
    pub tail: Vec<(f64, f64, f64)>,
}

/// Compare logged weights against a known (or estimated) log normalizer.
///
/// Non-finite entries count toward `count` but are skipped in the
/// moments; a -inf log weight can never exceed a tail threshold, so the
/// exceedance rates still include them in the denominator.
pub fn log_weight_diagnostics(
    log_weights: &[f64],
    log_z: f64,
    thresholds: &[f64],
) -> WeightDiagnostics {
    let count = log_weights.len();
    let finite: Vec<f64> = log_weights.iter().copied().filter(|w| w.is_finite()).collect();
    let n = finite.len().max(1) as f64;
    let centered_mean = finite.iter().map(|w| w - log_z).sum::<f64>() / n;
    let mean = finite.iter().sum::<f64>() / n;
    let variance = if finite.len() > 1 {
        finite.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (finite.len() as f64 - 1.0)
    } else {
        0.0
    };
    let mad = finite.iter().map(|w| (w - log_z).abs()).sum::<f64>() / n;
    let tail = thresholds
        .iter()
        .map(|&t| {
            let hits = log_weights.iter().filter(|&&w| w >= log_z + t).count();
            (t, hits as f64 / count.max(1) as f64, (-t).exp())
        })
        .collect();
    WeightDiagnostics {
        count,
        centered_mean,
        variance,
        mad,
        tail,
    }
}

/// Normal-approximation probability that a two-sided interval run covers
/// a given true value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageDiagnostic {
    /// True value minus the expected lower endpoint (>= 0 when the bound
    /// holds in expectation).
    pub lower_slack: f64,
    /// Expected upper endpoint minus the true value.
    pub upper_slack: f64,
    /// Estimated Pr[lower mean <= truth <= upper mean] over reruns.
    pub probability: f64,
}

/// Coverage from per-side slack and per-replicate standard deviations.
///
/// Each side's replicate mean is treated as normal; the sides use
/// independent randomness, so the joint coverage is the product
/// Phi(sqrt(n) * slack_lo / sd_lo) * Phi(sqrt(n) * slack_up / sd_up).
/// Zero slack with any noise gives Phi(0)^2 = 0.25: an interval whose
/// endpoints sit exactly on the truth covers it only a quarter of the
/// time. One replicate-mean standard error of slack per side gives
/// Phi(1)^2, roughly 0.7079.
pub fn coverage_probability(
    replicates: usize,
    lower_slack: f64,
    lower_sd: f64,
    upper_slack: f64,
    upper_sd: f64,
) -> f64 {
    let root_n = (replicates as f64).sqrt();
    let side = |slack: f64, sd: f64| {
        if sd == 0.0 {
            // Degenerate side: covered iff the slack is nonnegative.
            if slack >= 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            normal_cdf(root_n * slack / sd)
        }
    };
    side(lower_slack, lower_sd) * side(upper_slack, upper_sd)
}

/// Coverage report for a computed interval against a known true value.
pub fn coverage_diagnostic(
    interval: &super::IntervalEstimate,
    truth: f64,
) -> CoverageDiagnostic {
    let n = interval.lower.replicates;
    let root_n = (n as f64).sqrt();
    let lower_slack = truth - interval.lower.point;
    let upper_slack = interval.upper.point - truth;
    let probability = coverage_probability(
        n,
        lower_slack,
        interval.lower.std_error * root_n,
        upper_slack,
        interval.upper.std_error * root_n,
    );
    CoverageDiagnostic {
        lower_slack,
        upper_slack,
        probability,
    }
}
