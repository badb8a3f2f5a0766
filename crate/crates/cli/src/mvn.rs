//! `squint experiment-mvn` — interval width versus particles and proposal.
//!
//! Runs the entropy interval on a subset of a seeded random correlated
//! Gaussian for every (proposal, particle count) pair and reports each
//! interval next to the closed-form marginal entropy. The table shows the
//! bracket tightening as particles grow and as the proposal improves, with
//! a `covered` column checking the truth landed inside.

use std::path::PathBuf;

use clap::Args;

use squint::baseline::runtime_profile;
use squint::builtin::MvnModel;
use squint::{entropy_interval, EstimatorConfig, JointModel, StackSpec, TargetSelection};

use crate::config::{parse_name_list, parse_selection, parse_usize_list, stack_id};
use crate::rows::{write_rows, SweepRow};
use crate::Failure;

#[derive(Args, Debug)]
pub struct MvnArgs {
    /// Dimension of the random correlated Gaussian.
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Comma-separated site names to target (default: the last half, so
    /// the ancestral-prefix proposal cannot see the observations and a
    /// real inference gap exists).
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated particle counts to sweep.
    #[arg(long, default_value = "4,16,64,256,1024")]
    particles: String,
    /// Comma-separated proposals: `prior` and/or `regression`.
    #[arg(long, default_value = "prior,regression")]
    proposals: String,
    /// Training simulations for the regression proposal.
    #[arg(long, default_value_t = 400)]
    train: usize,
    /// Replicates per interval.
    #[arg(long, default_value_t = 64)]
    replicates: usize,
    /// Seed for the model's random covariance.
    #[arg(long, default_value_t = 7)]
    model_seed: u64,
    /// Seed for the estimates.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    timing: bool,
}

pub fn run(args: MvnArgs) -> Result<(), Failure> {
    if args.dim < 2 {
        return Err(Failure::Config(
            "experiment-mvn needs dim >= 2 so a strict subset exists".into(),
        ));
    }
    let model = MvnModel::random_correlated(args.dim, args.model_seed);
    let sel = match &args.target {
        Some(names) => parse_selection(&parse_name_list(names))?,
        None => {
            let half: Vec<squint::Address> = model.addresses()[args.dim / 2..].to_vec();
            TargetSelection::new(half).map_err(Failure::from)?
        }
    };
    sel.validate(&model).map_err(Failure::from)?;
    if sel.is_full(&model) {
        return Err(Failure::Config(
            "experiment-mvn needs a strict subset: the full joint has no inference gap".into(),
        ));
    }
    let truth = model.subset_entropy(&sel)?;
    let particle_grid = parse_usize_list(&args.particles, "particles")?;
    if args.replicates == 0 {
        return Err(Failure::Config("replicates must be at least 1".into()));
    }

    let mut specs = Vec::new();
    for name in args.proposals.split(',').map(str::trim) {
        match name {
            "prior" => specs.push(StackSpec::Prior),
            "regression" => {
                if args.train == 0 {
                    return Err(Failure::Config("train must be at least 1".into()));
                }
                specs.push(StackSpec::Regression { train: args.train });
            }
            other => {
                return Err(Failure::Config(format!(
                    "unknown proposal '{other}' (expected prior or regression)"
                )))
            }
        }
    }
    if specs.is_empty() {
        return Err(Failure::Config("no proposals requested".into()));
    }

    let target_label = {
        let names: Vec<String> = sel.addresses().iter().map(|a| a.to_string()).collect();
        names.join("+")
    };
    let model_label = format!("mvn_random({};seed={})", args.dim, args.model_seed);
    let cfg = EstimatorConfig {
        replicates: args.replicates,
        seed: args.seed,
        ..EstimatorConfig::default()
    };

    let mut out = Vec::new();
    for base in &specs {
        for &p in &particle_grid {
            let spec = StackSpec::Sir {
                particles: p,
                base: Box::new(base.clone()),
            };
            let (result, timing) = runtime_profile("interval", args.replicates, || {
                entropy_interval(&model, &sel, &spec, &cfg)
            });
            let interval = result?;
            if !interval.is_valid() {
                return Err(Failure::Invalid(format!(
                    "interval for {} with {} is unusable",
                    target_label,
                    stack_id(&spec)
                )));
            }
            out.push(SweepRow {
                model: model_label.clone(),
                target: target_label.clone(),
                proposal: stack_id(&spec),
                particles: p,
                lower: interval.lower.point,
                lower_stderr: interval.lower.std_error,
                upper: interval.upper.point,
                upper_stderr: interval.upper.std_error,
                width: interval.width(),
                truth,
                covered: interval.contains(truth),
                covered_3se: interval.contains_within(truth, 3.0),
                replicates: args.replicates,
                inner: cfg.inner,
                seed: args.seed,
                wall_time_ms: args.timing.then_some(timing.wall_ms),
            });
        }
    }
    write_rows(&out, args.output.as_deref())
}
