//! `squint experiment-pair-grid` — log-weight health across proposal widths.
//!
//! The cleanest window on importance-weight behavior is the one-dimensional
//! Gaussian pair: target N(0,1), proposal N(0,sd^2), for which the KL
//! divergence and the log-normalizer (zero) are known exactly. For each sd
//! in a grid, draws log weights and reports their centered mean (which
//! should sit one KL below zero), variance, mean absolute deviation against
//! the 2 + 2*KL bound, and exceedance rates against the exp(-t) tail bound.

use std::path::PathBuf;

use clap::Args;

use rand::Rng;
use rand_distr::StandardNormal;

use squint::baseline::runtime_profile;
use squint::estimate::diagnostics::log_weight_diagnostics;
use squint::special::normal_logpdf;
use squint::stream::{domain, substream};

use crate::config::parse_f64_list;
use crate::rows::{write_rows, PairGridRow};
use crate::Failure;

#[derive(Args, Debug)]
pub struct PairGridArgs {
    /// Comma-separated proposal standard deviations.
    #[arg(long, default_value = "0.5,0.75,1.0,1.5,2.0,3.0")]
    proposal_sds: String,
    /// Log weights drawn per grid point.
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    /// Seed for the draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    timing: bool,
}

pub fn run(args: PairGridArgs) -> Result<(), Failure> {
    if args.samples < 2 {
        return Err(Failure::Config("samples must be at least 2".into()));
    }
    let sds = parse_f64_list(&args.proposal_sds, "proposal sd")?;
    let thresholds = [1.0, 2.0, 3.0];

    let mut out = Vec::new();
    for (g, &sd) in sds.iter().enumerate() {
        // KL(N(0,sd^2) || N(0,1)) = (sd^2 - 1 - ln sd^2) / 2.
        let kl = 0.5 * (sd * sd - 1.0 - (sd * sd).ln());
        let (diag, timing) = runtime_profile("grid point", args.samples, || {
            let mut rng = substream(args.seed, domain::OUTER, g as u64);
            let lws: Vec<f64> = (0..args.samples)
                .map(|_| {
                    let x: f64 = sd * rng.sample::<f64, _>(StandardNormal);
                    normal_logpdf(x, 0.0, 1.0) - normal_logpdf(x, 0.0, sd)
                })
                .collect();
            log_weight_diagnostics(&lws, 0.0, &thresholds)
        });
        out.push(PairGridRow {
            proposal_sd: sd,
            kl,
            mean_log_weight: diag.centered_mean,
            variance: diag.variance,
            mad: diag.mad,
            mad_bound: 2.0 + 2.0 * kl,
            tail1_rate: diag.tail[0].1,
            tail1_bound: diag.tail[0].2,
            tail2_rate: diag.tail[1].1,
            tail2_bound: diag.tail[1].2,
            tail3_rate: diag.tail[2].1,
            tail3_bound: diag.tail[2].2,
            samples: args.samples,
            seed: args.seed,
            wall_time_ms: args.timing.then_some(timing.wall_ms),
        });
    }
    write_rows(&out, args.output.as_deref())
}
