//! `squint run` — estimate one measure from a JSON configuration.

use std::path::PathBuf;

use clap::Args;

use squint::baseline::runtime_profile;
use squint::measure::estimate_measure;

use crate::config::{outer_particles, sharing_id, stack_id, RunConfig};
use crate::rows::{write_rows, RunRow};
use crate::Failure;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configuration's estimator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the wall_time_ms column (measured durations vary run to run,
    /// so timing forfeits byte-identical output).
    #[arg(long)]
    timing: bool,
    /// Emit one extra row per composed entropy term.
    #[arg(long)]
    per_term: bool,
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.estimator.seed = seed;
    }
    let model = cfg.model.build()?;
    let query = cfg.measure.to_query()?;

    let (result, timing) = runtime_profile("run", 1, || {
        estimate_measure(model.as_ref(), &query, &cfg.proposal, &cfg.estimator, cfg.sharing)
    });
    let estimate = result?;
    if !estimate.is_valid() {
        return Err(Failure::Invalid(format!(
            "estimate of {} is unusable: {} non-finite replicate values, endpoints [{}, {}]",
            query.describe(),
            estimate.invalid,
            estimate.lower,
            estimate.upper,
        )));
    }

    let wall = args.timing.then_some(timing.wall_ms);
    let shared = |row: String, measure: String| RunRow {
        row,
        model: cfg.model.id(),
        measure,
        lower: f64::NAN,
        lower_stderr: f64::NAN,
        upper: f64::NAN,
        upper_stderr: f64::NAN,
        width: f64::NAN,
        midpoint: f64::NAN,
        replicates: cfg.estimator.replicates,
        inner: cfg.estimator.inner,
        refresh_moves: cfg.estimator.refresh_moves,
        seed: cfg.estimator.seed,
        proposal: stack_id(&cfg.proposal),
        particles: outer_particles(&cfg.proposal),
        sharing: sharing_id(cfg.sharing).to_string(),
        invalid: 0,
        wall_time_ms: wall,
    };

    let mut rows = Vec::new();
    let mut head = shared("measure".into(), query.describe());
    head.lower = estimate.lower;
    head.lower_stderr = estimate.lower_std_error;
    head.upper = estimate.upper;
    head.upper_stderr = estimate.upper_std_error;
    head.width = estimate.width();
    head.midpoint = estimate.midpoint();
    head.invalid = estimate.invalid;
    rows.push(head);

    if args.per_term {
        for (i, term) in estimate.terms.iter().enumerate() {
            let names: Vec<String> = term
                .selection
                .addresses()
                .iter()
                .map(|a| a.to_string())
                .collect();
            let label = format!("{:+}*H({{{}}})", term.coeff, names.join(","));
            let mut row = shared(format!("term{i}"), label);
            row.lower = term.interval.lower.point;
            row.lower_stderr = term.interval.lower.std_error;
            row.upper = term.interval.upper.point;
            row.upper_stderr = term.interval.upper.std_error;
            row.width = term.interval.width();
            row.midpoint = term.interval.midpoint();
            row.invalid = term.interval.lower.invalid + term.interval.upper.invalid;
            rows.push(row);
        }
    }

    write_rows(&rows, args.output.as_deref())
}
