//! CSV output: row schemas and the writer plumbing.
//!
//! Every command emits RFC 4180 CSV with a header row. Output is
//! byte-for-byte reproducible for a fixed seed: floats serialize through
//! the shortest round-trip representation, row order is deterministic,
//! and the `wall_time_ms` column — always present, always last — stays
//! empty unless timing was explicitly requested.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::Failure;

/// One `squint run` result row (the whole measure, or one of its terms).
#[derive(Debug, Serialize)]
pub struct RunRow {
    pub row: String,
    pub model: String,
    pub measure: String,
    pub lower: f64,
    pub lower_stderr: f64,
    pub upper: f64,
    pub upper_stderr: f64,
    pub width: f64,
    pub midpoint: f64,
    pub replicates: usize,
    pub inner: usize,
    pub refresh_moves: usize,
    pub seed: u64,
    pub proposal: String,
    pub particles: Option<usize>,
    pub sharing: String,
    pub invalid: usize,
    pub wall_time_ms: Option<f64>,
}

/// One particle-sweep row from `squint experiment-mvn`.
#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub target: String,
    pub proposal: String,
    pub particles: usize,
    pub lower: f64,
    pub lower_stderr: f64,
    pub upper: f64,
    pub upper_stderr: f64,
    pub width: f64,
    pub truth: f64,
    /// Truth strictly inside [lower, upper]. The guarantee is in
    /// expectation: a tight interval's noisy endpoints straddle the truth
    /// only ~25% of the time even when both bounds are exact.
    pub covered: bool,
    /// Truth inside the interval widened by three standard errors per
    /// side — misses here indicate bias beyond measurement noise.
    pub covered_3se: bool,
    pub replicates: usize,
    pub inner: usize,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

/// One candidate row from `squint experiment-rank`.
#[derive(Debug, Serialize)]
pub struct RankRow {
    pub rank: usize,
    pub candidate: String,
    pub evidence: String,
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    pub width: f64,
    pub exact: f64,
    pub exact_rank: usize,
    pub replicates: usize,
    pub particles: usize,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

/// One proposal-width row from `squint experiment-pair-grid`.
#[derive(Debug, Serialize)]
pub struct PairGridRow {
    pub proposal_sd: f64,
    pub kl: f64,
    pub mean_log_weight: f64,
    pub variance: f64,
    pub mad: f64,
    pub mad_bound: f64,
    pub tail1_rate: f64,
    pub tail1_bound: f64,
    pub tail2_rate: f64,
    pub tail2_bound: f64,
    pub tail3_rate: f64,
    pub tail3_bound: f64,
    pub samples: usize,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

/// One method row from `squint baseline-compare`.
#[derive(Debug, Serialize)]
pub struct BaselineRow {
    pub method: String,
    pub model: String,
    pub target: String,
    pub samples: Option<usize>,
    pub particles: Option<usize>,
    pub estimate: f64,
    pub lower: Option<f64>,
    pub lower_stderr: Option<f64>,
    pub upper: Option<f64>,
    pub upper_stderr: Option<f64>,
    pub width: Option<f64>,
    pub truth: f64,
    pub abs_error: f64,
    pub seed: u64,
    pub wall_time_ms: Option<f64>,
}

/// Write rows as CSV to `path`, or stdout when no path was given.
pub fn write_rows<R: Serialize>(rows: &[R], path: Option<&Path>) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::Config(format!("cannot write output: {e}"));
    let csv_err = |e: csv::Error| Failure::Config(format!("cannot write output: {e}"));
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    match path {
        Some(p) => std::fs::write(p, &buf).map_err(io_err),
        None => std::io::stdout().write_all(&buf).map_err(io_err),
    }
}
