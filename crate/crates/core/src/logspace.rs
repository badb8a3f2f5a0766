//! Log-space weight arithmetic.
//!
//! All importance weights in this crate live in log space. Zero probability
//! is `-inf`, which propagates correctly through sums and products of
//! weights; it only becomes an error when a zero lands in a divisor (see the
//! call sites). `NaN` never originates here: the helpers below are total on
//! inputs that are real or `-inf`.

use rand::Rng;
use rand::RngCore;

use crate::error::{Error, Result};

/// log(Σ exp(xs[i])), max-shifted for stability.
///
/// Empty input and all-`-inf` input both return `-inf` (an empty sum of
/// probability mass).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        // Either empty, all -inf, or contains +inf/NaN; return the max so
        // +inf and NaN propagate rather than being masked.
        return mx;
    }
    let sum: f64 = xs.iter().map(|&x| (x - mx).exp()).sum();
    mx + sum.ln()
}

/// log((1/n) Σ exp(xs[i])) — the log of the arithmetic mean of weights.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// Sum by pairwise reduction.
///
/// The reduction tree depends only on the slice length, so results are
/// bit-identical no matter how the values were produced (serially or by a
/// pool of any width), and rounding error grows like O(log n) rather than
/// O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Arithmetic mean via pairwise summation. Empty input returns NaN.
pub fn pairwise_mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance via pairwise summation. Needs at least two
/// values; returns 0.0 for shorter input.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = pairwise_mean(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

/// Draw one index from the categorical distribution proportional to
/// `exp(log_weights[i])`.
///
/// Consumes exactly one uniform and inverts the cumulative distribution in
/// index order, so a fixed stream yields a fixed index regardless of how the
/// weights were computed. Errors with [`Error::AllWeightsZero`] when no
/// index carries mass.
pub fn categorical_from_log_weights(rng: &mut dyn RngCore, log_weights: &[f64]) -> Result<usize> {
    let total = log_sum_exp(log_weights);
    if total == f64::NEG_INFINITY {
        return Err(Error::AllWeightsZero);
    }
    let u: f64 = rng.gen::<f64>();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &lw) in log_weights.iter().enumerate() {
        let p = (lw - total).exp();
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return Ok(i);
        }
    }
    // Rounding can leave cum slightly below 1; fall back to the last index
    // with mass.
    Ok(last_positive)
}
