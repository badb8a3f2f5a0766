//! `squint baseline-compare` — intervals versus nearest-neighbor estimates.
//!
//! On a subset of a random correlated Gaussian (closed-form truth), runs
//! the k-nearest-neighbor point estimator at several sample sizes next to
//! the two-sided interval estimator at several particle counts. The kNN
//! rows carry no interval columns — a point estimate admits no finite-
//! sample guarantee — while the interval rows show the truth trapped
//! between endpoints.

use std::path::PathBuf;

use clap::Args;

use squint::baseline::{knn_entropy_of_selection, runtime_profile, KnnConfig};
use squint::builtin::MvnModel;
use squint::{entropy_interval, EstimatorConfig, JointModel, StackSpec, TargetSelection};

use crate::config::{parse_name_list, parse_selection, parse_usize_list};
use crate::rows::{write_rows, BaselineRow};
use crate::Failure;

#[derive(Args, Debug)]
pub struct BaselineArgs {
    /// Dimension of the random correlated Gaussian.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Comma-separated site names to target (default: the last half, so
    /// the prior proposal faces a real inference gap).
    #[arg(long)]
    target: Option<String>,
    /// Seed for the model's random covariance.
    #[arg(long, default_value_t = 11)]
    model_seed: u64,
    /// Comma-separated kNN sample sizes.
    #[arg(long, default_value = "500,2000,8000")]
    sizes: String,
    /// Comma-separated SIR particle counts for the intervals.
    #[arg(long, default_value = "16,64,256")]
    particles: String,
    /// Replicates per interval.
    #[arg(long, default_value_t = 64)]
    replicates: usize,
    /// Nearest neighbor order k.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Seed for draws and estimates.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the wall_time_ms column.
    #[arg(long)]
    timing: bool,
}

pub fn run(args: BaselineArgs) -> Result<(), Failure> {
    if args.dim < 2 {
        return Err(Failure::Config(
            "baseline-compare needs dim >= 2 so a strict subset exists".into(),
        ));
    }
    if args.replicates == 0 || args.k == 0 {
        return Err(Failure::Config("replicates and k must be at least 1".into()));
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
    let truth = model.subset_entropy(&sel)?;
    let sizes = parse_usize_list(&args.sizes, "sizes")?;
    let particle_grid = parse_usize_list(&args.particles, "particles")?;

    let model_label = format!("mvn_random({};seed={})", args.dim, args.model_seed);
    let target_label = {
        let names: Vec<String> = sel.addresses().iter().map(|a| a.to_string()).collect();
        names.join("+")
    };
    let knn_cfg = KnnConfig {
        k: args.k,
        ..KnnConfig::default()
    };

    let mut out = Vec::new();
    for &n in &sizes {
        let (result, timing) = runtime_profile("knn", n, || {
            knn_entropy_of_selection(&model, &sel, n, &knn_cfg, args.seed)
        });
        let estimate = result?;
        if !estimate.is_finite() {
            return Err(Failure::Invalid(format!(
                "kNN estimate at {n} samples is non-finite"
            )));
        }
        out.push(BaselineRow {
            method: format!("knn(k={})", args.k),
            model: model_label.clone(),
            target: target_label.clone(),
            samples: Some(n),
            particles: None,
            estimate,
            lower: None,
            lower_stderr: None,
            upper: None,
            upper_stderr: None,
            width: None,
            truth,
            abs_error: (estimate - truth).abs(),
            seed: args.seed,
            wall_time_ms: args.timing.then_some(timing.wall_ms),
        });
    }

    let cfg = EstimatorConfig {
        replicates: args.replicates,
        seed: args.seed,
        ..EstimatorConfig::default()
    };
    for &p in &particle_grid {
        let spec = StackSpec::sir_prior(p);
        let (result, timing) = runtime_profile("interval", args.replicates, || {
            entropy_interval(&model, &sel, &spec, &cfg)
        });
        let interval = result?;
        if !interval.is_valid() {
            return Err(Failure::Invalid(format!(
                "interval at {p} particles is unusable"
            )));
        }
        out.push(BaselineRow {
            method: "interval(sir_prior)".into(),
            model: model_label.clone(),
            target: target_label.clone(),
            samples: None,
            particles: Some(p),
            estimate: interval.midpoint(),
            lower: Some(interval.lower.point),
            lower_stderr: Some(interval.lower.std_error),
            upper: Some(interval.upper.point),
            upper_stderr: Some(interval.upper.std_error),
            width: Some(interval.width()),
            truth,
            abs_error: (interval.midpoint() - truth).abs(),
            seed: args.seed,
            wall_time_ms: args.timing.then_some(timing.wall_ms),
        });
    }
    write_rows(&out, args.output.as_deref())
}
